#pragma once

#include <cstdint>
#include <vector>

#include "veram/dataset.hpp"
#include "veram/tensor.hpp"

namespace veram {

/// Single affine + LogSoftMax classifier, trained with NLL and SGD with
/// momentum. Used twice: on per-view features to extract confidences, and
/// by the oracle as the readout over concatenated selected-view features.
struct LinearSoftmaxClassifier {
  Tensor w;  // classes x dim
  Tensor b;  // classes

  std::vector<double> log_probs(const double* x) const;
  int predict(const double* x) const;
};

struct ReadoutTrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  int max_epochs = 200;
  double rel_improvement = 1e-5;  // convergence: relative NLL gain over the window
  int window = 10;
  std::uint64_t seed = 1;
};

/// Full-batch NLL training over (sample, label) rows (dim doubles each).
LinearSoftmaxClassifier train_readout(const std::vector<std::vector<double>>& samples,
                                      const std::vector<int>& labels, int classes, int dim,
                                      const ReadoutTrainConfig& cfg);

/// Trains the per-view classifier on every view of every training shape.
/// Throws DataError when fewer than two classes are present.
LinearSoftmaxClassifier train_confidence_net(const Dataset& train, const ReadoutTrainConfig& cfg = {});

/// Fills shape.confidences with exp(log-prob of the shape's own label) at
/// every cell. Pure in (classifier, features); parallel over shapes when
/// threads > 1.
void extract_confidences(const LinearSoftmaxClassifier& net, Dataset& ds, int threads = 1);

}  // namespace veram
