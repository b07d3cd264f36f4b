#include "ofdmrsma/allocation_optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "ofdmrsma/reference_oracle.hpp"

namespace ofdmrsma {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kKktTol = 1e-6;
constexpr double kQosPenalty = 50.0;
constexpr int kInnerCap = 60;

// Waterfilling over parallel gains: q_n = max(0, mu - noise/gain_n), the
// water level bisected until the budget is exhausted.
RVector waterfill_powers(const RVector& gains, double power_budget,
                         double noise_var) {
  const int n = static_cast<int>(gains.size());
  RVector inv(n);
  double max_inv = 0.0;
  bool any_positive = false;
  for (int i = 0; i < n; ++i) {
    if (gains[i] > 0.0) {
      inv[i] = noise_var / gains[i];
      max_inv = std::max(max_inv, inv[i]);
      any_positive = true;
    } else {
      inv[i] = std::numeric_limits<double>::infinity();
    }
  }
  RVector q = RVector::Zero(n);
  if (!any_positive) {
    return q;
  }
  auto allocated = [&](double mu) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(inv[i]) && mu > inv[i]) total += mu - inv[i];
    }
    return total;
  };
  double lo = 0.0;
  double hi = max_inv + power_budget;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (allocated(mid) < power_budget ? lo : hi) = mid;
  }
  const double mu = 0.5 * (lo + hi);
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(inv[i])) q[i] = std::max(0.0, mu - inv[i]);
  }
  return q;
}

// Alternating equalizer / weight / amplitude optimizer shared by the RSMA and
// NOMA problems. Amplitude layout: [common | user 0 | ... | user K-1] when a
// common stream exists, else [user 0 | ... | user K-1].
class WmmseEngine {
 public:
  WmmseEngine(std::span<const CouplingMatrix> couplings,
              const OptimizerOptions& opts, bool has_common,
              std::vector<int> sic_order)
      : couplings_(couplings),
        opts_(opts),
        has_common_(has_common),
        k_users_(static_cast<int>(couplings.size())),
        n_(static_cast<int>(couplings[0].g.rows())),
        dims_((k_users_ + (has_common ? 1 : 0)) * n_) {
    opts_.validate();
    for (const auto& c : couplings_) {
      if (c.g.rows() != n_ || c.g.cols() != n_) {
        throw std::invalid_argument("optimizer: coupling matrices disagree on N");
      }
    }
    if (opts_.min_rates.size() == 0) {
      min_rates_ = RVector::Zero(k_users_);
    } else if (opts_.min_rates.size() == k_users_) {
      min_rates_ = opts_.min_rates;
    } else {
      throw std::invalid_argument("optimizer: min_rates length != K");
    }
    qos_active_ = min_rates_.maxCoeff() > 0.0;

    position_.assign(k_users_, 0);
    if (!has_common_) {
      if (!is_permutation(sic_order, k_users_)) {
        throw std::invalid_argument("optimize_noma: sic_order is not a "
                                    "permutation of the users");
      }
      sic_order_ = std::move(sic_order);
      for (int pos = 0; pos < k_users_; ++pos) {
        position_[sic_order_[pos]] = pos;
      }
    }

    row_energy_.reserve(k_users_);
    diag_gain_sq_.reserve(k_users_);
    for (int k = 0; k < k_users_; ++k) {
      row_energy_.push_back(couplings_[k].g.cwiseAbs2());
      diag_gain_sq_.push_back(couplings_[k].g.diagonal().cwiseAbs2());
    }
  }

  OptimizerResult optimize() {
    if (qos_active_) {
      check_feasibility();
    }
    OptimizerResult best;
    bool have_best = false;
    double identity_max = 0.0;
    for (int s = 0; s < opts_.num_starts; ++s) {
      OptimizerResult candidate = run_outer(make_start(s), Mode::sum_rate);
      identity_max = std::max(identity_max, candidate.max_identity_residual);
      if (!have_best || better_than(candidate, best)) {
        best = std::move(candidate);
        have_best = true;
      }
    }
    best.max_identity_residual = identity_max;
    return best;
  }

 private:
  enum class Mode { feasibility, sum_rate };

  // ---- stream indexing -----------------------------------------------

  int common_offset() const { return 0; }
  int user_offset(int u) const { return (has_common_ ? 1 + u : u) * n_; }

  // ---- multi-start ----------------------------------------------------

  RVector make_start(int index) {
    RVector a = RVector::Zero(dims_);
    const double p_t = opts_.power_budget;
    if (has_common_) {
      switch (index) {
        case 0: {  // uniform, half common / half private
          a.segment(common_offset(), n_).setConstant(
              std::sqrt(p_t / (2.0 * n_)));
          for (int u = 0; u < k_users_; ++u) {
            a.segment(user_offset(u), n_)
                .setConstant(std::sqrt(p_t / (2.0 * k_users_ * n_)));
          }
          return a;
        }
        case 1: {  // all-private uniform
          for (int u = 0; u < k_users_; ++u) {
            a.segment(user_offset(u), n_)
                .setConstant(std::sqrt(p_t / (k_users_ * n_)));
          }
          return a;
        }
        case 2:
          return ofdma_start();
        case 3:
          return noma_embed_start();
        default:
          return random_start(index);
      }
    }
    switch (index) {
      case 0: {  // uniform over all private streams
        for (int u = 0; u < k_users_; ++u) {
          a.segment(user_offset(u), n_)
              .setConstant(std::sqrt(p_t / (k_users_ * n_)));
        }
        return a;
      }
      case 1: {  // everything on the last-decoded (interference-free) user
        const int last = sic_order_.back();
        a.segment(user_offset(last), n_).setConstant(std::sqrt(p_t / n_));
        return a;
      }
      case 2: {  // powers tilted toward per-carrier diagonal gains
        double total = 0.0;
        for (int u = 0; u < k_users_; ++u) total += diag_gain_sq_[u].sum();
        if (total <= 0.0) return make_start(0);
        for (int u = 0; u < k_users_; ++u) {
          a.segment(user_offset(u), n_) =
              (diag_gain_sq_[u] * (p_t / total)).cwiseSqrt();
        }
        return a;
      }
      default:
        return random_start(index);
    }
  }

  // The common stream can carry the first-decoded user's whole message, so a
  // solved NOMA point embeds into the RSMA variable space: that user's powers
  // move to the common stream, later users stay private.
  RVector noma_embed_start() const {
    OptimizerOptions inner = opts_;
    inner.min_rates = RVector();
    inner.num_starts = 4;
    const auto order = default_sic_order(couplings_);
    const auto noma = optimize_noma(couplings_, inner, order);
    RVector a = RVector::Zero(dims_);
    const int first = order.front();
    for (int sc = 0; sc < n_; ++sc) {
      a[common_offset() + sc] = std::sqrt(noma.alloc.private_powers(first, sc));
    }
    for (int u = 0; u < k_users_; ++u) {
      if (u == first) continue;
      for (int sc = 0; sc < n_; ++sc) {
        a[user_offset(u) + sc] = std::sqrt(noma.alloc.private_powers(u, sc));
      }
    }
    return a;
  }

  RVector ofdma_start() const {
    const auto assignment =
        assign_subcarriers_ofdma(couplings_, OfdmaAssignMode::best_gain);
    RVector gains(n_);
    for (int sc = 0; sc < n_; ++sc) {
      gains[sc] = diag_gain_sq_[assignment[sc]][sc];
    }
    const RVector q =
        waterfill_powers(gains, opts_.power_budget, opts_.noise_var);
    RVector a = RVector::Zero(dims_);
    for (int sc = 0; sc < n_; ++sc) {
      a[user_offset(assignment[sc]) + sc] = std::sqrt(q[sc]);
    }
    return a;
  }

  RVector random_start(int index) const {
    std::mt19937_64 rng(opts_.seed + 0x9e3779b97f4a7c15ULL *
                                         static_cast<std::uint64_t>(index + 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    RVector a(dims_);
    for (int i = 0; i < dims_; ++i) {
      a[i] = std::abs(normal(rng));
    }
    const double s = a.squaredNorm();
    if (s > 0.0) a *= std::sqrt(opts_.power_budget / s);
    return a;
  }

  // ---- allocation plumbing ---------------------------------------------

  PowerAllocation alloc_from(const RVector& a) const {
    PowerAllocation alloc = PowerAllocation::zeros(k_users_, n_);
    if (has_common_) {
      alloc.common = a.segment(common_offset(), n_).cwiseAbs2();
    }
    for (int u = 0; u < k_users_; ++u) {
      alloc.private_powers.row(u) =
          a.segment(user_offset(u), n_).cwiseAbs2().transpose();
    }
    return alloc;
  }

  // True rates, share bookkeeping and the (penalized) objective at `a`.
  struct Evaluation {
    PowerAllocation alloc;
    RateReport report;
    double unmet = 0.0;      // total QoS shortfall after optimal shares
    double objective = 0.0;  // mode-dependent scalar that is traced
  };

  Evaluation evaluate_true(const RVector& a, Mode mode) {
    Evaluation ev;
    ev.alloc = alloc_from(a);
    if (has_common_) {
      ev.report = evaluate_rsma(couplings_, ev.alloc, opts_.noise_var);
    } else {
      ev.report = evaluate_noma(couplings_, ev.alloc.private_powers,
                                opts_.noise_var, sic_order_);
    }
    // Common-rate shares: fill QoS gaps user by user, remainder to user 0.
    double pool = has_common_ ? ev.report.common_total : 0.0;
    double gap_total = 0.0;
    for (int k = 0; k < k_users_; ++k) {
      const double rate_k = ev.report.private_rate.row(k).sum();
      const double gap = std::max(0.0, min_rates_[k] - rate_k);
      gap_total += gap;
      const double share = std::min(gap, pool);
      ev.alloc.common_shares[k] = share;
      pool -= share;
    }
    ev.alloc.common_shares[0] += pool;
    ev.unmet = std::max(0.0, gap_total - (has_common_ ? ev.report.common_total
                                                      : 0.0));
    if (mode == Mode::feasibility) {
      ev.objective = -ev.unmet;
    } else {
      ev.objective =
          ev.report.sum_rate - (qos_active_ ? kQosPenalty * ev.unmet : 0.0);
    }
    return ev;
  }

  // ---- steps (a) and (b): equalizers, weights, surrogate coefficients ----

  struct Quadratics {
    // Per receiver, per subcarrier. w: MSE weight; wh2: w * |h|^2;
    // wblin: w * Re{h g_nn}; c0: (1 + ln w)/ln2.
    std::vector<RVector> w_priv, wh2_priv, wblin_priv, c0_priv;
    std::vector<RVector> w_com, wh2_com, wblin_com, c0_com;
  };

  // Received power at every (receiver, subcarrier) for the private stage and,
  // when present, the common stage.
  void stage_powers(const RVector& a, std::vector<RVector>& t_priv,
                    std::vector<RVector>& t_com) const {
    t_priv.assign(k_users_, RVector());
    t_com.assign(k_users_, RVector());
    if (has_common_) {
      RVector q_tot = RVector::Zero(n_);
      for (int u = 0; u < k_users_; ++u) {
        q_tot += a.segment(user_offset(u), n_).cwiseAbs2();
      }
      const RVector q_c = a.segment(common_offset(), n_).cwiseAbs2();
      for (int k = 0; k < k_users_; ++k) {
        const RVector base = row_energy_[k] * q_tot;
        t_priv[k] = base.array() + opts_.noise_var;
        t_com[k] = (base + row_energy_[k] * q_c).array() + opts_.noise_var;
      }
    } else {
      // Suffix power sums in decoding order: user k still sees everyone
      // decoded at or after its own position.
      std::vector<RVector> suffix(k_users_ + 1, RVector::Zero(n_));
      for (int pos = k_users_ - 1; pos >= 0; --pos) {
        suffix[pos] = suffix[pos + 1] +
                      a.segment(user_offset(sic_order_[pos]), n_).cwiseAbs2();
      }
      for (int k = 0; k < k_users_; ++k) {
        t_priv[k] =
            (row_energy_[k] * suffix[position_[k]]).array() + opts_.noise_var;
      }
    }
  }

  Quadratics build_quadratics(const RVector& a, double& identity_residual) {
    std::vector<RVector> t_priv, t_com;
    stage_powers(a, t_priv, t_com);

    Quadratics quad;
    quad.w_priv.resize(k_users_);
    quad.wh2_priv.resize(k_users_);
    quad.wblin_priv.resize(k_users_);
    quad.c0_priv.resize(k_users_);
    if (has_common_) {
      quad.w_com.resize(k_users_);
      quad.wh2_com.resize(k_users_);
      quad.wblin_com.resize(k_users_);
      quad.c0_com.resize(k_users_);
    }

    const PowerAllocation alloc = alloc_from(a);
    for (int k = 0; k < k_users_; ++k) {
      quad.w_priv[k].resize(n_);
      quad.wh2_priv[k].resize(n_);
      quad.wblin_priv[k].resize(n_);
      quad.c0_priv[k].resize(n_);
      if (has_common_) {
        quad.w_com[k].resize(n_);
        quad.wh2_com[k].resize(n_);
        quad.wblin_com[k].resize(n_);
        quad.c0_com[k].resize(n_);
      }
      for (int sc = 0; sc < n_; ++sc) {
        const double a_k = a[user_offset(k) + sc];
        fill_instance(diag_gain_sq_[k][sc], a_k, t_priv[k][sc],
                      quad.w_priv[k][sc], quad.wh2_priv[k][sc],
                      quad.wblin_priv[k][sc], quad.c0_priv[k][sc]);
        if (has_common_) {
          const double a_c = a[common_offset() + sc];
          fill_instance(diag_gain_sq_[k][sc], a_c, t_com[k][sc],
                        quad.w_com[k][sc], quad.wh2_com[k][sc],
                        quad.wblin_com[k][sc], quad.c0_com[k][sc]);
        }
        // Rate identity: -log2(e_mmse) must reproduce the directly computed
        // rate, stream by stream.
        const double r_priv =
            has_common_
                ? rate_from_sinr(rsma_private_sinr(couplings_, alloc,
                                                   opts_.noise_var, k, sc))
                : rate_from_sinr(noma_private_sinr(couplings_,
                                                   alloc.private_powers,
                                                   opts_.noise_var, sic_order_,
                                                   k, sc));
        identity_residual = std::max(
            identity_residual,
            std::abs(std::log2(quad.w_priv[k][sc]) - r_priv));
        if (has_common_) {
          const double r_com = rate_from_sinr(
              rsma_common_sinr(couplings_, alloc, opts_.noise_var, k, sc));
          identity_residual = std::max(
              identity_residual,
              std::abs(std::log2(quad.w_com[k][sc]) - r_com));
        }
      }
    }
    return quad;
  }

  // MMSE equalizer h = conj(g_nn) a / T, weight w = 1/e_mmse with
  // e_mmse = 1 - |g_nn a|^2 / T; -log2(e_mmse) = log2(w) is the stream rate.
  static void fill_instance(double d2, double amp, double t, double& w,
                            double& wh2, double& wblin, double& c0) {
    const double signal = d2 * amp * amp;
    const double residual = t - signal;  // interference + noise, >= noise_var
    w = t / residual;
    wh2 = signal / (t * residual);
    wblin = d2 * amp / residual;
    c0 = (1.0 + std::log(w)) / kLn2;
  }

  // ---- surrogate objective over amplitudes (weights fixed) ---------------

  struct SurrogateParts {
    RVector r_priv;          // per-user private surrogate rate sums
    RVector r_com;           // per-user common surrogate rate sums
    double pool = 0.0;       // min over users of r_com, clamped at 0
    int argmin_com = 0;
    double unmet = 0.0;
    double value = 0.0;
  };

  SurrogateParts surrogate(const RVector& a, const Quadratics& quad,
                           Mode mode) const {
    std::vector<RVector> t_priv, t_com;
    stage_powers(a, t_priv, t_com);

    SurrogateParts parts;
    parts.r_priv.resize(k_users_);
    parts.r_com = RVector::Zero(k_users_);
    for (int k = 0; k < k_users_; ++k) {
      const auto a_k = a.segment(user_offset(k), n_);
      parts.r_priv[k] = quad.c0_priv[k].sum() -
                        (quad.wh2_priv[k].dot(t_priv[k]) -
                         2.0 * quad.wblin_priv[k].dot(a_k) +
                         quad.w_priv[k].sum()) /
                            kLn2;
      if (has_common_) {
        const auto a_c = a.segment(common_offset(), n_);
        parts.r_com[k] = quad.c0_com[k].sum() -
                         (quad.wh2_com[k].dot(t_com[k]) -
                          2.0 * quad.wblin_com[k].dot(a_c) +
                          quad.w_com[k].sum()) /
                             kLn2;
      }
    }
    double pool_raw = 0.0;
    if (has_common_) {
      parts.argmin_com = 0;
      for (int k = 1; k < k_users_; ++k) {
        if (parts.r_com[k] < parts.r_com[parts.argmin_com]) {
          parts.argmin_com = k;
        }
      }
      pool_raw = parts.r_com[parts.argmin_com];
      parts.pool = std::max(0.0, pool_raw);
    }
    double gaps = 0.0;
    for (int k = 0; k < k_users_; ++k) {
      gaps += std::max(0.0, min_rates_[k] - parts.r_priv[k]);
    }
    parts.unmet = std::max(0.0, gaps - parts.pool);

    if (mode == Mode::feasibility) {
      parts.value = -parts.unmet;
    } else {
      parts.value = parts.r_priv.sum() + (has_common_ ? pool_raw : 0.0) -
                    (qos_active_ ? kQosPenalty * parts.unmet : 0.0);
    }
    return parts;
  }

  // The surrogate restricted to the active piece (argmin common user and
  // active penalty terms fixed) is a separable concave quadratic
  //   sum_m (b_m a_m - q_m a_m^2 / 2),
  // because every cross term enters through squared amplitudes only.
  struct PieceQuadratic {
    RVector curvature;  // q, >= 0
    RVector slope;      // b, >= 0
  };

  PieceQuadratic piece_quadratics(const Quadratics& quad,
                                  const SurrogateParts& parts,
                                  Mode mode) const {
    // Receiver weights: base objective plus active penalty pieces.
    RVector lambda_priv = RVector::Zero(k_users_);
    double lambda_com = 0.0;
    if (mode == Mode::sum_rate) {
      lambda_priv.setOnes();
      lambda_com = 1.0;
    }
    if (parts.unmet > 0.0 && (mode == Mode::feasibility || qos_active_)) {
      const double rho = mode == Mode::feasibility ? 1.0 : kQosPenalty;
      for (int k = 0; k < k_users_; ++k) {
        if (min_rates_[k] - parts.r_priv[k] > 0.0) lambda_priv[k] += rho;
      }
      if (has_common_ && parts.pool > 0.0) lambda_com += rho;
    }

    PieceQuadratic piece;
    piece.curvature = RVector::Zero(dims_);
    piece.slope = RVector::Zero(dims_);
    const double scale = 2.0 / kLn2;
    if (has_common_) {
      RVector m_priv = RVector::Zero(n_);
      for (int k = 0; k < k_users_; ++k) {
        if (lambda_priv[k] != 0.0) {
          m_priv += lambda_priv[k] *
                    (row_energy_[k].transpose() * quad.wh2_priv[k]);
        }
      }
      const int star = parts.argmin_com;
      RVector c_com = RVector::Zero(n_);
      if (lambda_com != 0.0) {
        c_com = lambda_com *
                (row_energy_[star].transpose() * quad.wh2_com[star]);
        piece.curvature.segment(common_offset(), n_) = scale * c_com;
        piece.slope.segment(common_offset(), n_) =
            scale * lambda_com * quad.wblin_com[star];
      }
      const RVector coef = m_priv + c_com;
      for (int u = 0; u < k_users_; ++u) {
        piece.curvature.segment(user_offset(u), n_) = scale * coef;
        piece.slope.segment(user_offset(u), n_) =
            scale * lambda_priv[u] * quad.wblin_priv[u];
      }
    } else {
      // Curvature for user u accumulates every receiver decoded at or
      // before u.
      std::vector<RVector> m(k_users_);
      for (int k = 0; k < k_users_; ++k) {
        m[k] = lambda_priv[k] *
               (row_energy_[k].transpose() * quad.wh2_priv[k]);
      }
      RVector prefix = RVector::Zero(n_);
      for (int pos = 0; pos < k_users_; ++pos) {
        const int u = sic_order_[pos];
        prefix += m[u];
        piece.curvature.segment(user_offset(u), n_) = scale * prefix;
        piece.slope.segment(user_offset(u), n_) =
            scale * lambda_priv[u] * quad.wblin_priv[u];
      }
    }
    return piece;
  }

  RVector gradient(const RVector& a, const PieceQuadratic& piece) const {
    return piece.slope - piece.curvature.cwiseProduct(a);
  }

  // Exact maximizer of the piece over {a >= 0, ||a||^2 <= P_t}: KKT gives
  // a_m(mu) = b_m / (q_m + 2 mu), with the power multiplier mu bisected until
  // the budget is met. Amplitudes outside the piece (b = q = 0) are frozen.
  RVector solve_piece(const RVector& a_old, const PieceQuadratic& piece) const {
    RVector a = a_old;
    double frozen_power = 0.0;
    std::vector<int> active;
    active.reserve(dims_);
    for (int m = 0; m < dims_; ++m) {
      if (piece.curvature[m] == 0.0 && piece.slope[m] == 0.0) {
        frozen_power += a_old[m] * a_old[m];
      } else {
        active.push_back(m);
      }
    }
    const double budget = opts_.power_budget - frozen_power;
    if (active.empty() || budget <= 0.0) return a;

    const auto power_at = [&](double mu) {
      double total = 0.0;
      for (int m : active) {
        const double denom = piece.curvature[m] + 2.0 * mu;
        if (denom <= 0.0) return std::numeric_limits<double>::infinity();
        const double x = piece.slope[m] / denom;
        total += x * x;
      }
      return total;
    };

    double mu = 0.0;
    if (power_at(0.0) > budget) {
      double lo = 0.0;
      double hi = 1.0;
      while (power_at(hi) > budget && hi < 1e30) hi *= 4.0;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (power_at(mid) > budget ? lo : hi) = mid;
      }
      mu = hi;
    }
    for (int m : active) {
      a[m] = piece.slope[m] / (piece.curvature[m] + 2.0 * mu);
    }
    return project(a);
  }

  // Projection onto {a >= 0, ||a||^2 <= P_t}: clip, then scale radially. The
  // scale factor is the closed-form power multiplier; shaved by 1e-12 so the
  // recomputed power never lands above the budget.
  RVector project(RVector v) const {
    v = v.cwiseMax(0.0);
    const double s = v.squaredNorm();
    if (s > opts_.power_budget) {
      v *= std::sqrt(opts_.power_budget / s) * (1.0 - 1e-12);
    }
    return v;
  }

  // Step (c): alternate exact solves of the active piece with projected
  // gradient ascent (Armijo backtracking) to cross the piece boundaries.
  double amplitude_step(RVector& a, const Quadratics& quad, Mode mode) {
    double kkt = std::numeric_limits<double>::infinity();
    double warm_step = warm_step_;
    for (int inner = 0; inner < kInnerCap; ++inner) {
      const SurrogateParts parts = surrogate(a, quad, mode);
      const PieceQuadratic piece = piece_quadratics(quad, parts, mode);
      const RVector grad = gradient(a, piece);
      kkt = (project(a + grad) - a).lpNorm<Eigen::Infinity>() /
            std::max(1.0, a.lpNorm<Eigen::Infinity>());
      if (kkt < kKktTol) break;

      // The piece is a separable quadratic; its constrained maximizer is
      // closed-form up to the bisected power multiplier.
      const RVector exact = solve_piece(a, piece);
      if (surrogate(exact, quad, mode).value >
          parts.value + 1e-14 * (1.0 + std::abs(parts.value))) {
        a = exact;
        continue;
      }

      double sigma = std::min(warm_step * 4.0, 1e12);
      bool accepted = false;
      for (int half = 0; half < 60; ++half) {
        const RVector cand = project(a + sigma * grad);
        const RVector delta = cand - a;
        if (delta.norm() == 0.0) break;
        const double f_cand = surrogate(cand, quad, mode).value;
        if (f_cand >= parts.value + 1e-4 * grad.dot(delta)) {
          a = cand;
          warm_step = sigma;
          accepted = true;
          break;
        }
        sigma *= 0.5;
      }
      if (!accepted) break;
    }
    warm_step_ = warm_step;
    return kkt;
  }

  // ---- outer loop ---------------------------------------------------------

  OptimizerResult run_outer(RVector a, Mode mode) {
    warm_step_ = 1.0;
    OptimizerResult result;
    Evaluation ev = evaluate_true(a, mode);
    result.objective_trace.push_back(ev.objective);
    bool converged = false;
    int iter = 0;
    for (; iter < opts_.max_iters; ++iter) {
      Quadratics quad = build_quadratics(a, result.max_identity_residual);
      result.kkt_residual = amplitude_step(a, quad, mode);
      // Interior points are dominated radially: push to the power sphere.
      const double s = a.squaredNorm();
      if (s > 0.0 && s < opts_.power_budget) {
        a *= std::sqrt(opts_.power_budget / s) * (1.0 - 1e-12);
      }
      const double prev = ev.objective;
      ev = evaluate_true(a, mode);
      if (ev.objective < prev - 1e-8) {
        throw std::logic_error("wmmse: objective decreased by " +
                               std::to_string(prev - ev.objective));
      }
      result.objective_trace.push_back(ev.objective);
      if (mode == Mode::feasibility && ev.unmet <= 0.0) {
        converged = true;
        ++iter;
        break;
      }
      if (std::abs(ev.objective - prev) <=
          opts_.rel_tol * std::max(std::abs(prev), 1e-12)) {
        converged = true;
        ++iter;
        break;
      }
    }
    result.alloc = std::move(ev.alloc);
    result.report = std::move(ev.report);
    result.converged = converged;
    result.iterations = iter;
    unmet_last_ = ev.unmet;
    return result;
  }

  void check_feasibility() {
    run_outer(make_start(0), Mode::feasibility);
    if (unmet_last_ > 1e-6) {
      std::ostringstream msg;
      msg << "QoS infeasible: minimum rates exceed what the power budget "
             "supports by "
          << unmet_last_ << " bit/s/Hz";
      throw QosInfeasible(msg.str(), -unmet_last_);
    }
  }

  bool better_than(const OptimizerResult& a, const OptimizerResult& b) const {
    if (!qos_active_) {
      return a.report.sum_rate > b.report.sum_rate;
    }
    const auto violation = [&](const OptimizerResult& r) {
      double v = 0.0;
      for (int k = 0; k < k_users_; ++k) {
        v = std::max(v, min_rates_[k] - r.report.private_rate.row(k).sum() -
                            r.alloc.common_shares[k]);
      }
      return v;
    };
    const bool a_ok = violation(a) <= 1e-6;
    const bool b_ok = violation(b) <= 1e-6;
    if (a_ok != b_ok) return a_ok;
    return a.report.sum_rate > b.report.sum_rate;
  }

  std::span<const CouplingMatrix> couplings_;
  OptimizerOptions opts_;
  bool has_common_;
  int k_users_;
  int n_;
  int dims_;
  RVector min_rates_;
  bool qos_active_ = false;
  std::vector<int> sic_order_;
  std::vector<int> position_;
  std::vector<RMatrix> row_energy_;
  std::vector<RVector> diag_gain_sq_;
  double warm_step_ = 1.0;
  double unmet_last_ = 0.0;
};

}  // namespace

void OptimizerOptions::validate() const {
  if (max_iters < 1) throw std::invalid_argument("OptimizerOptions: max_iters");
  if (rel_tol <= 0.0) throw std::invalid_argument("OptimizerOptions: rel_tol");
  if (num_starts < 1) {
    throw std::invalid_argument("OptimizerOptions: num_starts");
  }
  if (power_budget <= 0.0) {
    throw std::invalid_argument("OptimizerOptions: power_budget");
  }
  if (noise_var <= 0.0) {
    throw std::invalid_argument("OptimizerOptions: noise_var");
  }
  if (min_rates.size() > 0 && min_rates.minCoeff() < 0.0) {
    throw std::invalid_argument("OptimizerOptions: min_rates must be >= 0");
  }
}

OptimizerResult optimize_rsma(std::span<const CouplingMatrix> couplings,
                              const OptimizerOptions& opts) {
  if (couplings.empty()) {
    throw std::invalid_argument("optimize_rsma: no coupling matrices");
  }
  WmmseEngine engine(couplings, opts, /*has_common=*/true, {});
  return engine.optimize();
}

OptimizerResult optimize_noma(std::span<const CouplingMatrix> couplings,
                              const OptimizerOptions& opts,
                              const std::vector<int>& sic_order) {
  if (couplings.empty()) {
    throw std::invalid_argument("optimize_noma: no coupling matrices");
  }
  WmmseEngine engine(couplings, opts, /*has_common=*/false, sic_order);
  return engine.optimize();
}

std::vector<int> assign_subcarriers_ofdma(
    std::span<const CouplingMatrix> couplings, OfdmaAssignMode mode) {
  if (couplings.empty()) {
    throw std::invalid_argument("assign_subcarriers_ofdma: no couplings");
  }
  const int k_users = static_cast<int>(couplings.size());
  const int n = static_cast<int>(couplings[0].g.rows());
  std::vector<int> assignment(n, 0);
  if (mode == OfdmaAssignMode::equal_split) {
    // Contiguous near-equal blocks; earlier users take the extra carriers.
    for (int u = 0; u < k_users; ++u) {
      const int begin = static_cast<int>(std::ceil(double(n) * u / k_users));
      const int end = static_cast<int>(std::ceil(double(n) * (u + 1) / k_users));
      for (int sc = begin; sc < end; ++sc) assignment[sc] = u;
    }
  } else {
    for (int sc = 0; sc < n; ++sc) {
      int best = 0;
      for (int k = 1; k < k_users; ++k) {
        if (std::norm(couplings[k].g(sc, sc)) >
            std::norm(couplings[best].g(sc, sc))) {
          best = k;
        }
      }
      assignment[sc] = best;
    }
  }
  return assignment;
}

OptimizerResult waterfill_ofdma(std::span<const CouplingMatrix> couplings,
                                const std::vector<int>& assignment,
                                const OptimizerOptions& opts) {
  opts.validate();
  const int k_users = static_cast<int>(couplings.size());
  const int n = static_cast<int>(couplings[0].g.rows());
  if (static_cast<int>(assignment.size()) != n) {
    throw std::invalid_argument("waterfill_ofdma: assignment length != N");
  }
  RVector gains(n);
  for (int sc = 0; sc < n; ++sc) {
    const int owner = assignment[sc];
    if (owner < 0 || owner >= k_users) {
      throw std::invalid_argument("waterfill_ofdma: invalid assignment entry");
    }
    gains[sc] = std::norm(couplings[owner].g(sc, sc));
  }
  const RVector q = waterfill_powers(gains, opts.power_budget, opts.noise_var);

  OptimizerResult result;
  result.alloc = PowerAllocation::zeros(k_users, n);
  for (int sc = 0; sc < n; ++sc) {
    result.alloc.private_powers(assignment[sc], sc) = q[sc];
  }
  result.report = evaluate_ofdma(couplings, assignment, q, opts.noise_var);
  result.objective_trace = {result.report.sum_rate};
  result.converged = true;
  result.iterations = 0;
  return result;
}

}  // namespace ofdmrsma
