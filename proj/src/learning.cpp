#include "veram/learning.hpp"

#include <cmath>

#include "veram/errors.hpp"
#include "veram/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace veram {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kClassical: return "classical";
    case Variant::kBoundary: return "boundary";
    case Variant::kConf: return "conf";
    case Variant::kLoc: return "loc";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "classical") return Variant::kClassical;
  if (name == "boundary") return Variant::kBoundary;
  if (name == "conf") return Variant::kConf;
  if (name == "loc") return Variant::kLoc;
  throw UsageError("unknown variant '" + name + "' (expected classical|boundary|conf|loc)");
}

double nll_loss(const std::vector<double>& log_probs, int label) {
  if (label < 0 || label >= static_cast<int>(log_probs.size()))
    throw UsageError("nll_loss: label " + std::to_string(label) + " out of range");
  return -log_probs[static_cast<std::size_t>(label)];
}

ReinforceGrad reinforce_grad(Location u, Location l, double reward, double baseline, double confidence,
                             bool correct, const SchemeConfig& scheme, GridShape grid) {
  double advantage = reward - baseline;
  double w = 1.0;
  if (scheme.confidence_weighting()) w = correct ? confidence : 1.0 - confidence;

  auto coord = [&](double uc, double lc, double lo) {
    double sign = scheme.sign_rule() ? boundary_sign(uc, lc, correct, lo) : 1.0;
    return sign * advantage * gauss_logpdf_grad(uc, lc, scheme.delta) * w;
  };
  return {coord(u.r, l.r, grid.lo_r()), coord(u.c, l.c, grid.lo_c())};
}

LocationLoss location_loss(const std::vector<Location>& locations, bool toroidal, GridShape grid) {
  LocationLoss out;
  out.grads.assign(locations.size(), {});
  const double margin = 1.0 / grid.rows;
  if (locations.size() < 2) return out;

  for (std::size_t i = 0; i < locations.size(); ++i) {
    for (std::size_t j = i + 1; j < locations.size(); ++j) {
      double d = pair_distance(locations[i], locations[j], toroidal, grid);
      double gap = margin - d;
      if (gap <= 0) continue;  // hinge corner included: subgradient 0
      out.value += gap;
      if (d == 0) continue;    // coincident pair: no defined direction
      // d(margin - |li - lj|)/dli = -(li - lj)/d
      double gr = -(locations[i].r - locations[j].r) / d;
      double gc = -(locations[i].c - locations[j].c) / d;
      out.grads[i].r += gr;
      out.grads[i].c += gc;
      out.grads[j].r -= gr;
      out.grads[j].c -= gc;
    }
  }
  return out;
}

double baseline_update(double baseline, double reward, double rate) {
  if (rate <= 0 || rate > 1) throw UsageError("baseline_update: rate must be in (0,1]");
  return (1.0 - rate) * baseline + rate * reward;
}

bool LossReport::finite() const {
  if (!std::isfinite(nll) || !std::isfinite(location) || !std::isfinite(accuracy)) return false;
  for (double v : reinforce_norm)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {

struct EpisodeGrads {
  std::vector<Tensor> param_grads;
  double nll = 0;
  double loc = 0;
  double reward = 0;
  std::vector<double> reinforce_norm;  // per step
};

EpisodeGrads run_episode(const Dataset& ds, const FeatureGrid& shape, const AgentParams& params,
                         const SchemeConfig& scheme, std::uint64_t episode_seed, double inv_batch) {
  Rng rng(episode_seed);
  RolloutOptions opts;
  opts.delta = scheme.delta;
  opts.rng = &rng;
  Rollout ro = rollout(ds, shape, params, RolloutMode::kTrain, opts);
  Tape& tape = *ro.tape;
  const EpisodeTrace& trace = ro.trace;
  const int steps = params.cfg.steps;
  const bool correct = trace.predicted == trace.label;

  EpisodeGrads out;
  out.reward = trace.reward;
  out.nll = nll_loss(trace.log_probs, trace.label);
  out.reinforce_norm.assign(static_cast<std::size_t>(steps), 0.0);

  // (a) classification loss through the deterministic path
  NodeId loss = tape.nll(ro.log_probs_node, trace.label);
  tape.seed_gradient(loss, Tensor::vec({inv_batch}));

  // (b) REINFORCE at each u_t; descent needs -dR/du
  for (int t = 0; t < steps; ++t) {
    const StepRecord& rec = trace.steps[static_cast<std::size_t>(t)];
    ReinforceGrad g = reinforce_grad(rec.estimate, rec.viewpoint, trace.reward,
                                     params.baselines[static_cast<std::size_t>(t)], rec.confidence, correct,
                                     scheme, ds.grid());
    out.reinforce_norm[static_cast<std::size_t>(t)] = std::sqrt(g.r * g.r + g.c * g.c);
    tape.seed_gradient(ro.u_nodes[static_cast<std::size_t>(t)],
                       Tensor::vec({-g.r * inv_batch, -g.c * inv_batch}));
  }

  // (c) view-separation loss at each u_t
  if (scheme.location_loss_active()) {
    std::vector<Location> visited;
    visited.reserve(static_cast<std::size_t>(steps));
    for (const StepRecord& rec : trace.steps) visited.push_back(rec.viewpoint);
    LocationLoss ll = location_loss(visited, scheme.toroidal_distance, ds.grid());
    out.loc = ll.value;
    for (int t = 0; t < steps; ++t)
      tape.seed_gradient(ro.u_nodes[static_cast<std::size_t>(t)],
                         Tensor::vec({scheme.lambda_loc * ll.grads[static_cast<std::size_t>(t)].r * inv_batch,
                                      scheme.lambda_loc * ll.grads[static_cast<std::size_t>(t)].c * inv_batch}));
  }

  tape.backward();
  out.param_grads = tape.param_gradients();
  return out;
}

std::uint64_t episode_seed(const TrainStepContext& ctx, int shape_index) {
  return Rng::mix(ctx.seed, 0x5EED, static_cast<std::uint64_t>(ctx.epoch),
                  static_cast<std::uint64_t>(shape_index));
}

}  // namespace

LossReport train_step(const Dataset& ds, const std::vector<int>& batch_indices, AgentParams& params,
                      SgdState& sgd, const SchemeConfig& scheme, const TrainStepContext& ctx) {
  if (batch_indices.empty()) throw UsageError("train_step: empty batch");
  const int B = static_cast<int>(batch_indices.size());
  const double inv_batch = 1.0 / B;
  std::vector<EpisodeGrads> per_shape(static_cast<std::size_t>(B));

  if (ctx.threads <= 1) {
    for (int i = 0; i < B; ++i) {
      int idx = batch_indices[static_cast<std::size_t>(i)];
      per_shape[static_cast<std::size_t>(i)] = run_episode(
          ds, ds.shapes[static_cast<std::size_t>(idx)], params, scheme, episode_seed(ctx, idx), inv_batch);
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(ctx.threads)
#endif
    for (int i = 0; i < B; ++i) {
      int idx = batch_indices[static_cast<std::size_t>(i)];
      per_shape[static_cast<std::size_t>(i)] = run_episode(
          ds, ds.shapes[static_cast<std::size_t>(idx)], params, scheme, episode_seed(ctx, idx), inv_batch);
    }
  }

  // Reduce in batch order: the sum is the same for any thread count.
  std::vector<Tensor> total;
  total.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors) total.push_back(Tensor::zeros(t.shape));
  LossReport report;
  report.examples = B;
  report.reinforce_norm.assign(static_cast<std::size_t>(params.cfg.steps), 0.0);
  for (const EpisodeGrads& eg : per_shape) {
    for (std::size_t p = 0; p < total.size(); ++p) total[p] += eg.param_grads[p];
    report.nll += eg.nll * inv_batch;
    report.location += eg.loc * inv_batch;
    report.accuracy += eg.reward * inv_batch;
    for (std::size_t t = 0; t < eg.reinforce_norm.size(); ++t)
      report.reinforce_norm[t] += eg.reinforce_norm[t] * inv_batch;
  }

  for (const Tensor& g : total)
    if (!g.all_finite()) throw NumericError("train_step: non-finite gradient");
  if (!report.finite()) throw NumericError("train_step: non-finite loss");

  sgd_step(params.tensors, total, sgd, ctx.lr);
  for (const Tensor& t : params.tensors)
    if (!t.all_finite()) throw NumericError("train_step: non-finite parameter after update");

  // Baselines update after the batch, from the batch's rewards, in order.
  for (const EpisodeGrads& eg : per_shape)
    for (double& b : params.baselines) b = baseline_update(b, eg.reward, scheme.baseline_rate);

  return report;
}

EvalReport evaluate(const Dataset& ds, const AgentParams& params, int threads) {
  if (ds.shapes.empty()) throw DataError("evaluate: dataset has no shapes");
  const int n = static_cast<int>(ds.shapes.size());
  const int k = ds.classes();
  std::vector<int> predicted(static_cast<std::size_t>(n));
  std::vector<int> border_hits(static_cast<std::size_t>(n));

  auto eval_one = [&](int i) {
    Rollout ro = rollout(ds, ds.shapes[static_cast<std::size_t>(i)], params, RolloutMode::kTest);
    predicted[static_cast<std::size_t>(i)] = ro.trace.predicted;
    int hits = 0;
    for (const StepRecord& rec : ro.trace.steps)
      if (ds.grid().is_border(rec.cell)) ++hits;
    border_hits[static_cast<std::size_t>(i)] = hits;
  };

  if (threads <= 1) {
    for (int i = 0; i < n; ++i) eval_one(i);
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (int i = 0; i < n; ++i) eval_one(i);
  }

  EvalReport rep;
  rep.total = n;
  rep.confusion.assign(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(k), 0));
  rep.per_class_acc.assign(static_cast<std::size_t>(k), 0.0);
  rep.per_class_count.assign(static_cast<std::size_t>(k), 0);
  long views = 0, border_views = 0;
  for (int i = 0; i < n; ++i) {
    int y = ds.shapes[static_cast<std::size_t>(i)].label;
    int p = predicted[static_cast<std::size_t>(i)];
    ++rep.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
    ++rep.per_class_count[static_cast<std::size_t>(y)];
    if (y == p) ++rep.correct;
    views += params.cfg.steps;
    border_views += border_hits[static_cast<std::size_t>(i)];
  }
  rep.instance_acc = static_cast<double>(rep.correct) / n;
  rep.border_fraction = views > 0 ? static_cast<double>(border_views) / static_cast<double>(views) : 0.0;

  int present = 0;
  double acc_sum = 0;
  for (int c = 0; c < k; ++c) {
    if (rep.per_class_count[static_cast<std::size_t>(c)] == 0) {
      rep.empty_class_warning = true;
      continue;
    }
    double acc = static_cast<double>(rep.confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]) /
                 rep.per_class_count[static_cast<std::size_t>(c)];
    rep.per_class_acc[static_cast<std::size_t>(c)] = acc;
    acc_sum += acc;
    ++present;
  }
  rep.class_acc = present > 0 ? acc_sum / present : 0.0;
  return rep;
}

}  // namespace veram
