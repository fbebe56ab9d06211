#include "rare/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>

#include "rare/errors.hpp"
#include "rare/estimator.hpp"
#include "rare/normal.hpp"
#include "rare/util.hpp"

namespace rare {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double snap_tau(double tau) {
  if (!(tau > kTauSnap)) return 0.0;
  return std::min(tau, 1.0);
}

double pending_noise(const AugmentedInput& in, const PosteriorState& state) {
  return observation_noise(in.level, state.hyper());
}

// Standardized margin and latent variance; sigma below the floor means the
// point is determined and contributes no variance.
struct Margin {
  double s = 0.0;
  double var = 0.0;
  bool random = false;
};

Margin margin(double mean, double var, double gamma) {
  Margin m;
  m.var = var;
  double sd = std::sqrt(var);
  m.random = sd >= kSigmaFloor;
  if (m.random) m.s = (gamma - mean) / sd;
  return m;
}

}  // namespace

PendingSet::PendingSet(const PosteriorState& state, std::vector<AugmentedInput> inputs)
    : inputs_(std::move(inputs)) {
  std::vector<AugmentedInput> sorted = inputs_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw InvalidInput("pending inputs must be distinct");
  if (inputs_.empty()) return;
  Eigen::MatrixXd a = state.normalized_cross_cov(inputs_, inputs_);
  for (std::size_t i = 0; i < inputs_.size(); ++i) a(i, i) += pending_noise(inputs_[i], state);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalFailure("pending covariance is singular");
  chol_ = llt.matrixL();
}

double forward_point_variance(const PosteriorState& state, const AugmentedInput& x,
                              const PendingSet& pending) {
  const AugmentedInput q[] = {x};
  MeanVar mv = state.normalized_mean_var(q);
  Margin m = margin(mv.mean(0), mv.var(0), state.gamma_normalized());
  if (!m.random) return 0.0;
  double tau = 1.0;
  if (!pending.empty()) {
    Eigen::VectorXd c = state.normalized_cross_cov(pending.inputs(), q).col(0);
    pending.cholesky().triangularView<Eigen::Lower>().solveInPlace(c);
    tau = 1.0 - c.squaredNorm() / m.var;
  }
  return point_variance_after(m.s, snap_tau(tau));
}

double acquisition_j(const PosteriorState& state, const PendingSet& pending,
                     std::span<const AugmentedInput> targets) {
  if (targets.empty()) throw InvalidInput("acquisition needs at least one target");
  MeanVar mv = state.normalized_mean_var(targets);
  Eigen::MatrixXd c;
  if (!pending.empty()) {
    c = state.normalized_cross_cov(pending.inputs(), targets);
    pending.cholesky().triangularView<Eigen::Lower>().solveInPlace(c);
  }
  double total = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    Margin m = margin(mv.mean(t), mv.var(t), state.gamma_normalized());
    if (!m.random) continue;
    double tau = pending.empty() ? 1.0 : 1.0 - c.col(t).squaredNorm() / m.var;
    total += point_variance_after(m.s, snap_tau(tau));
  }
  return total / static_cast<double>(targets.size());
}

GreedySelector::GreedySelector(const PosteriorState& state, std::vector<AugmentedInput> targets,
                               std::vector<Candidate> candidates, SelectorOptions opts)
    : state_(&state), opts_(opts), targets_(std::move(targets)), candidates_(std::move(candidates)) {
  if (targets_.empty()) throw InvalidInput("selector needs at least one target");
  const std::size_t nt = targets_.size();
  const std::size_t nc = candidates_.size();
  const auto& pool = state.pool();
  const auto& hyper = state.hyper();
  for (const auto& c : candidates_) {
    if (c.input.point >= pool.size() || c.input.level >= hyper.levels())
      throw InvalidInput("candidate outside the pool or fidelity range");
    if (!(c.cost > 0.0)) throw InvalidInput("candidate cost must be positive");
  }

  MeanVar mv = state.normalized_mean_var(targets_);
  s_.assign(nt, 0.0);
  var_.assign(nt, 0.0);
  tau_.assign(nt, 1.0);
  phi_.assign(nt, variance_angle(1.0));
  bound_.assign(nt, 0.0);
  active_slot_.assign(nt, -1);
  const double gamma = state.gamma_normalized();
  for (std::size_t t = 0; t < nt; ++t) {
    Margin m = margin(mv.mean(t), mv.var(t), gamma);
    var_[t] = m.var;
    if (!m.random) {
      tau_[t] = 0.0;
      phi_[t] = 0.0;
      continue;
    }
    s_[t] = m.s;
    bound_[t] = std::exp(-0.5 * m.s * m.s) / (2.0 * std::numbers::pi);
    // A target's point variance never exceeds bound * pi/2, so below the
    // tolerance it cannot move J.
    if (bound_[t] * (std::numbers::pi / 2.0) >= opts_.prune_tolerance) {
      active_slot_[t] = static_cast<std::ptrdiff_t>(active_.size());
      active_.push_back(t);
    }
  }

  sqrt_tau_.assign(nt, 0.0);
  ub_weight_.assign(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t) refresh_target(t);

  std::vector<AugmentedInput> cand_inputs(nc);
  for (std::size_t c = 0; c < nc; ++c) cand_inputs[c] = candidates_[c].input;
  targ_proj_ = state.projection(targets_);
  cand_proj_ = state.projection(cand_inputs);

  h_.resize(nc);
  chosen_.assign(nc, 0);
  for (std::size_t c = 0; c < nc; ++c) {
    const auto& in = candidates_[c].input;
    h_[c] = latent_kernel(in, in, pool, hyper) - cand_proj_.col(c).squaredNorm() +
            observation_noise(in.level, hyper);
  }

  const std::size_t na = active_.size();
  residual_.resize(nc, na);
  parallel_for(nc, [&](std::size_t c) {
    const auto& in = candidates_[c].input;
    for (std::size_t a = 0; a < na; ++a) {
      std::size_t t = active_[a];
      residual_(c, a) = latent_kernel(in, targets_[t], pool, hyper) -
                        cand_proj_.col(c).dot(targ_proj_.col(t));
    }
  });
}

void GreedySelector::refresh_target(std::size_t t) {
  phi_[t] = variance_angle(tau_[t]);
  sqrt_tau_[t] = std::sqrt(tau_[t]);
  ub_weight_[t] = 2.0 * bound_[t] / (std::sqrt(2.0 - tau_[t]) * static_cast<double>(targets_.size()));
}

std::optional<std::size_t> GreedySelector::find_candidate(const AugmentedInput& input) const {
  for (std::size_t c = 0; c < candidates_.size(); ++c)
    if (candidates_[c].input == input) return c;
  return std::nullopt;
}

double GreedySelector::delta_j(std::size_t c) const {
  if (chosen_[c] || !(h_[c] >= opts_.determined_floor)) return kNaN;
  const double hc = h_[c];
  const double* row = residual_.row(c).data();
  double total = 0.0;
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const std::size_t t = active_[a];
    const double v = row[a];
    double drop = v * v / (hc * var_[t]);
    if (!(drop > 0.0)) continue;
    double tau_new = snap_tau(tau_[t] - drop);
    // The angle moves by at most drop / sqrt(tau_new (2 - tau_new)).
    if (tau_new > 0.0 && bound_[t] * drop < opts_.prune_tolerance * std::sqrt(tau_new * (2.0 - tau_new)))
      continue;
    total -= variance_angle_integral(s_[t], variance_angle(tau_new), phi_[t]);
  }
  return total / static_cast<double>(targets_.size());
}

double GreedySelector::delta_j_bound(std::size_t c) const {
  const double hc = h_[c];
  const double* row = residual_.row(c).data();
  double total = 0.0;
  for (std::size_t a = 0; a < active_.size(); ++a) {
    const std::size_t t = active_[a];
    if (!(sqrt_tau_[t] > 0.0)) continue;
    const double drop = std::min(row[a] * row[a] / (hc * var_[t]), tau_[t]);
    // dJ_t = (1/2pi) int exp(-s^2/(2-u)) / sqrt(u (2-u)) du over [t_new, t_old]
    //      <= bound * 2 (sqrt(t_old) - sqrt(t_new)) / sqrt(2 - t_old).
    total += ub_weight_[t] * drop / (sqrt_tau_[t] + std::sqrt(tau_[t] - drop));
  }
  return total;
}

std::vector<double> GreedySelector::delta_j_all() const {
  std::vector<double> out(candidates_.size());
  parallel_for(candidates_.size(), [&](std::size_t c) { out[c] = delta_j(c); });
  return out;
}

double GreedySelector::current_j() const {
  double total = 0.0;
  for (std::size_t t = 0; t < targets_.size(); ++t) {
    if (var_[t] < kSigmaFloor * kSigmaFloor) continue;
    total += variance_angle_integral(s_[t], 0.0, phi_[t]);
  }
  return total / static_cast<double>(targets_.size());
}

double GreedySelector::projected(std::size_t target, std::size_t candidate) const {
  double m = 0.0;
  for (std::size_t q = 0; q < pending_.size(); ++q) m += targ_w_[q][target] * cand_w_[q][candidate];
  return m;
}

std::optional<Selection> GreedySelector::select_next() {
  const std::size_t nc = candidates_.size();
  std::vector<double> ub(nc, -1.0);
  parallel_for(nc, [&](std::size_t c) {
    if (!chosen_[c] && h_[c] >= opts_.determined_floor) ub[c] = delta_j_bound(c) / candidates_[c].cost;
  });
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < nc; ++c)
    if (ub[c] >= 0.0) order.push_back(c);
  if (order.empty()) return std::nullopt;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ub[a] != ub[b] ? ub[a] > ub[b] : a < b;
  });

  // Exact dJ only while a candidate's bound could still beat the best key.
  std::optional<std::size_t> best;
  double best_key = 0.0;
  double best_dj = 0.0;
  std::size_t next = 0;
  const std::size_t chunk = std::max<std::size_t>(thread_limit(), 1);
  std::vector<double> dj;
  while (next < order.size()) {
    if (best && ub[order[next]] * (1.0 + 1e-9) + 1e-300 < -best_key) break;
    const std::size_t end = std::min(order.size(), next + chunk);
    dj.assign(end - next, 0.0);
    parallel_for(end - next, [&](std::size_t i) { dj[i] = delta_j(order[next + i]); });
    exact_evaluations_ += end - next;
    for (std::size_t i = 0; i < end - next; ++i) {
      const std::size_t c = order[next + i];
      double key = std::min(dj[i], 0.0) / candidates_[c].cost;
      if (!best || key < best_key ||
          (key == best_key && candidates_[c].input < candidates_[*best].input)) {
        best = c;
        best_key = key;
        best_dj = dj[i];
      }
    }
    next = end;
  }
  // Zero-key ties are resolved by input order; the bound cannot separate them.
  if (best_key == 0.0) {
    for (std::size_t c : order)
      if (ub[c] == 0.0 && candidates_[c].input < candidates_[*best].input) {
        best = c;
        best_dj = 0.0;
      }
  }
  Selection sel = add(*best);
  sel.delta_j = best_dj;
  return sel;
}

Selection GreedySelector::add(std::size_t idx) {
  if (idx >= candidates_.size()) throw InvalidInput("candidate index out of range");
  if (chosen_[idx]) throw InvalidInput("candidate already selected");
  const double hstar = h_[idx];
  if (!(hstar >= opts_.determined_floor))
    throw InvalidInput("candidate is determined by the pending set");
  const double dj = delta_j(idx);

  const auto& pool = state_->pool();
  const auto& hyper = state_->hyper();
  const AugmentedInput star = candidates_[idx].input;
  const std::size_t nt = targets_.size();
  const std::size_t nc = candidates_.size();
  const double root = std::sqrt(hstar);
  const auto star_proj = cand_proj_.col(idx);

  // v_t = cov_n(*, t) - w_* . w_t for every target.
  std::vector<double> vt(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    if (active_slot_[t] >= 0) {
      vt[t] = residual_(idx, active_slot_[t]);
      continue;
    }
    double v = latent_kernel(star, targets_[t], pool, hyper) - star_proj.dot(targ_proj_.col(t));
    for (std::size_t q = 0; q < pending_.size(); ++q) v -= targ_w_[q][t] * cand_w_[q][idx];
    vt[t] = v;
  }
  // v_c = cov_n(*, c) - w_* . w_c; the noise term only enters on * itself.
  std::vector<double> vc(nc);
  parallel_for(nc, [&](std::size_t c) {
    double v = latent_kernel(star, candidates_[c].input, pool, hyper) - star_proj.dot(cand_proj_.col(c));
    for (std::size_t q = 0; q < pending_.size(); ++q) v -= cand_w_[q][idx] * cand_w_[q][c];
    vc[c] = v;
  });

  for (std::size_t t = 0; t < nt; ++t) {
    if (var_[t] < kSigmaFloor * kSigmaFloor) continue;
    tau_[t] = snap_tau(tau_[t] - vt[t] * vt[t] / (hstar * var_[t]));
    refresh_target(t);
  }
  for (std::size_t c = 0; c < nc; ++c) h_[c] -= vc[c] * vc[c] / hstar;

  const std::size_t na = active_.size();
  std::vector<double> va(na);
  for (std::size_t a = 0; a < na; ++a) va[a] = vt[active_[a]] / hstar;
  parallel_for(nc, [&](std::size_t c) {
    double* row = residual_.row(c).data();
    const double f = vc[c];
    for (std::size_t a = 0; a < na; ++a) row[a] -= f * va[a];
  });

  std::vector<double> cw(nc), tw(nt);
  for (std::size_t c = 0; c < nc; ++c) cw[c] = vc[c] / root;
  for (std::size_t t = 0; t < nt; ++t) tw[t] = vt[t] / root;
  cand_w_.push_back(std::move(cw));
  targ_w_.push_back(std::move(tw));
  chosen_[idx] = 1;
  pending_.push_back(star);
  return {star, dj, candidates_[idx].cost};
}

Selection select_next(const PosteriorState& state, const std::vector<AugmentedInput>& pending,
                      const std::vector<Candidate>& candidates,
                      const std::vector<AugmentedInput>& targets, SelectorOptions opts) {
  if (candidates.empty()) throw EmptySelection("no candidates to select from");
  std::vector<Candidate> all = candidates;
  std::vector<std::size_t> pending_idx;
  for (const auto& p : pending) {
    auto it = std::find_if(all.begin(), all.end(), [&](const Candidate& c) { return c.input == p; });
    if (it == all.end()) {
      all.push_back({p, 1.0});
      pending_idx.push_back(all.size() - 1);
    } else {
      pending_idx.push_back(static_cast<std::size_t>(it - all.begin()));
    }
  }
  GreedySelector sel(state, targets, std::move(all), opts);
  for (std::size_t i : pending_idx) sel.add(i);
  auto pick = sel.select_next();
  if (!pick) throw EmptySelection("every candidate is determined by the pending set");
  return *pick;
}

std::vector<Selection> select_batch(const PosteriorState& state,
                                    const std::vector<Candidate>& candidates,
                                    const std::vector<AugmentedInput>& targets, double budget,
                                    SelectorOptions opts) {
  if (!(budget > 0.0)) throw InvalidInput("selection budget must be positive");
  if (candidates.empty()) throw EmptySelection("no candidates to select from");
  GreedySelector sel(state, targets, candidates, opts);
  std::vector<Selection> out;
  double spent = 0.0;
  while (spent + kCostEpsilon < budget) {
    auto pick = sel.select_next();
    if (!pick) break;
    spent += pick->cost;
    out.push_back(*pick);
  }
  if (out.empty()) throw EmptySelection("every candidate is determined");
  return out;
}

}  // namespace rare
