#include "veram/oracle.hpp"

#include <cmath>
#include <string>

#include "veram/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace veram {

namespace {

std::vector<GridIndex> decode_sequence(long code, int steps, const GridShape& grid) {
  std::vector<GridIndex> seq(static_cast<std::size_t>(steps));
  long cells = grid.cell_count();
  // Most significant digit first so code order is lexicographic order.
  for (int t = steps - 1; t >= 0; --t) {
    int flat = static_cast<int>(code % cells);
    code /= cells;
    seq[static_cast<std::size_t>(t)] = {flat / grid.cols + 1, flat % grid.cols + 1};
  }
  return seq;
}

std::vector<std::vector<double>> gather(const Dataset& ds, const std::vector<GridIndex>& seq) {
  std::vector<std::vector<double>> rows;
  rows.reserve(ds.shapes.size());
  for (const FeatureGrid& s : ds.shapes) {
    std::vector<double> x;
    x.reserve(seq.size() * static_cast<std::size_t>(ds.feature_dim));
    for (GridIndex g : seq) {
      const float* f = ds.features_at(s, g);
      x.insert(x.end(), f, f + ds.feature_dim);
    }
    rows.push_back(std::move(x));
  }
  return rows;
}

double accuracy_of(const LinearSoftmaxClassifier& net, const std::vector<std::vector<double>>& rows,
                   const Dataset& ds) {
  long correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (net.predict(rows[i].data()) == ds.shapes[i].label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

}  // namespace

OracleResult best_fixed_sequence(const Dataset& train, const Dataset& test, const OracleConfig& cfg) {
  if (cfg.steps < 1) throw UsageError("oracle: need at least one step (T >= 1)");
  if (train.shapes.empty() || test.shapes.empty()) throw DataError("oracle: empty train or test split");
  if (train.rows != test.rows || train.cols != test.cols || train.feature_dim != test.feature_dim)
    throw DataError("oracle: train/test grids do not match");

  const GridShape grid = train.grid();
  double total_d = std::pow(static_cast<double>(grid.cell_count()), cfg.steps);
  if (total_d > static_cast<double>(cfg.budget))
    throw UsageError("oracle: " + std::to_string(total_d) + " sequences exceed budget " +
                     std::to_string(cfg.budget));
  const long total = static_cast<long>(total_d);

  std::vector<int> labels;
  labels.reserve(train.shapes.size());
  for (const FeatureGrid& s : train.shapes) labels.push_back(s.label);

  std::vector<double> test_acc(static_cast<std::size_t>(total));
  std::vector<double> train_acc(static_cast<std::size_t>(total));

  auto eval_sequence = [&](long code) {
    std::vector<GridIndex> seq = decode_sequence(code, cfg.steps, grid);
    std::vector<std::vector<double>> xs = gather(train, seq);
    LinearSoftmaxClassifier net =
        train_readout(xs, labels, train.classes(), cfg.steps * train.feature_dim, cfg.readout);
    train_acc[static_cast<std::size_t>(code)] = accuracy_of(net, xs, train);
    test_acc[static_cast<std::size_t>(code)] = accuracy_of(net, gather(test, seq), test);
  };

  if (cfg.threads <= 1) {
    for (long code = 0; code < total; ++code) eval_sequence(code);
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.threads)
#endif
    for (long code = 0; code < total; ++code) eval_sequence(code);
  }

  // Deterministic argmax: best accuracy, lexicographically smallest code.
  long best = 0;
  for (long code = 1; code < total; ++code)
    if (test_acc[static_cast<std::size_t>(code)] > test_acc[static_cast<std::size_t>(best)]) best = code;

  OracleResult out;
  out.sequence = decode_sequence(best, cfg.steps, grid);
  out.test_accuracy = test_acc[static_cast<std::size_t>(best)];
  out.train_accuracy = train_acc[static_cast<std::size_t>(best)];
  out.sequences_evaluated = total;
  return out;
}

double policy_gap(double oracle_accuracy, double agent_accuracy) {
  return oracle_accuracy - agent_accuracy;
}

}  // namespace veram
