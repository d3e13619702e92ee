#include "veram/confidence.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "veram/errors.hpp"
#include "veram/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace veram {

std::vector<double> LinearSoftmaxClassifier::log_probs(const double* x) const {
  const int k = w.rows();
  const int d = w.cols();
  std::vector<double> z(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) {
    double acc = b[r];
    const double* row = w.data.data() + static_cast<std::size_t>(r) * d;
    for (int c = 0; c < d; ++c) acc += row[c] * x[c];
    z[static_cast<std::size_t>(r)] = acc;
  }
  double mx = *std::max_element(z.begin(), z.end());
  double lse = 0;
  for (double v : z) lse += std::exp(v - mx);
  lse = mx + std::log(lse);
  for (double& v : z) v -= lse;
  return z;
}

int LinearSoftmaxClassifier::predict(const double* x) const {
  std::vector<double> lp = log_probs(x);
  return static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
}

LinearSoftmaxClassifier train_readout(const std::vector<std::vector<double>>& samples,
                                      const std::vector<int>& labels, int classes, int dim,
                                      const ReadoutTrainConfig& cfg) {
  if (samples.empty() || samples.size() != labels.size())
    throw UsageError("train_readout: empty or mismatched sample/label lists");

  Rng rng(Rng::mix(cfg.seed, 0xC1A55));
  LinearSoftmaxClassifier net;
  net.w = Tensor::uniform_init({classes, dim}, rng);
  net.b = Tensor::zeros({classes});

  Tensor vw = Tensor::zeros({classes, dim});
  Tensor vb = Tensor::zeros({classes});
  const double inv_n = 1.0 / static_cast<double>(samples.size());

  std::vector<double> nll_history;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Tensor gw = Tensor::zeros({classes, dim});
    Tensor gb = Tensor::zeros({classes});
    double nll = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const double* x = samples[i].data();
      std::vector<double> lp = net.log_probs(x);
      nll -= lp[static_cast<std::size_t>(labels[i])] * inv_n;
      // d nll / d logits = softmax - onehot
      for (int r = 0; r < classes; ++r) {
        double gz = (std::exp(lp[static_cast<std::size_t>(r)]) - (r == labels[i] ? 1.0 : 0.0)) * inv_n;
        if (gz == 0.0) continue;
        gb[r] += gz;
        double* gwrow = gw.data.data() + static_cast<std::size_t>(r) * dim;
        for (int c = 0; c < dim; ++c) gwrow[c] += gz * x[c];
      }
    }
    for (int i = 0; i < net.w.size(); ++i) {
      vw[i] = cfg.momentum * vw[i] - cfg.lr * gw[i];
      net.w[i] += vw[i];
    }
    for (int i = 0; i < net.b.size(); ++i) {
      vb[i] = cfg.momentum * vb[i] - cfg.lr * gb[i];
      net.b[i] += vb[i];
    }
    if (!std::isfinite(nll)) throw NumericError("train_readout: non-finite loss");

    nll_history.push_back(nll);
    if (static_cast<int>(nll_history.size()) > cfg.window) {
      double old = nll_history[nll_history.size() - 1 - static_cast<std::size_t>(cfg.window)];
      if (old - nll < cfg.rel_improvement * std::abs(old)) break;
    }
  }
  return net;
}

LinearSoftmaxClassifier train_confidence_net(const Dataset& train, const ReadoutTrainConfig& cfg) {
  std::set<int> present;
  for (const FeatureGrid& s : train.shapes) present.insert(s.label);
  if (present.size() < 2)
    throw DataError("train_confidence_net: need at least 2 classes present, got " +
                    std::to_string(present.size()));

  const std::size_t cells = static_cast<std::size_t>(train.rows) * train.cols;
  std::vector<std::vector<double>> samples;
  std::vector<int> labels;
  samples.reserve(train.shapes.size() * cells);
  for (const FeatureGrid& s : train.shapes) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const float* f = s.features.data() + cell * static_cast<std::size_t>(train.feature_dim);
      samples.emplace_back(f, f + train.feature_dim);
      labels.push_back(s.label);
    }
  }
  return train_readout(samples, labels, train.classes(), train.feature_dim, cfg);
}

void extract_confidences(const LinearSoftmaxClassifier& net, Dataset& ds, int threads) {
  const std::size_t cells = static_cast<std::size_t>(ds.rows) * ds.cols;
  const int n = static_cast<int>(ds.shapes.size());

  auto fill_one = [&](int i) {
    FeatureGrid& s = ds.shapes[static_cast<std::size_t>(i)];
    s.confidences.resize(cells);
    std::vector<double> x(static_cast<std::size_t>(ds.feature_dim));
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const float* f = s.features.data() + cell * static_cast<std::size_t>(ds.feature_dim);
      for (int d = 0; d < ds.feature_dim; ++d) x[static_cast<std::size_t>(d)] = f[d];
      std::vector<double> lp = net.log_probs(x.data());
      s.confidences[cell] = static_cast<float>(std::exp(lp[static_cast<std::size_t>(s.label)]));
    }
  };

  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fill_one(i);
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (int i = 0; i < n; ++i) fill_one(i);
  }
}

}  // namespace veram
