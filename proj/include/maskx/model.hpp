#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "maskx/dataset.hpp"
#include "maskx/image.hpp"
#include "maskx/rng.hpp"

namespace maskx {

// Differentiable classifier contract: probabilities plus the gradient of one
// class probability with respect to the input pixels.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual int input_height() const = 0;
  virtual int input_width() const = 0;
  virtual int input_channels() const = 0;
  virtual int num_classes() const = 0;

  virtual std::vector<double> predict(const Image& img) const = 0;
  virtual Image input_gradient(const Image& img, int class_index) const = 0;

  // Fused forward+backward; returns the class probability.
  virtual double predict_with_gradient(const Image& img, int class_index, Image& grad) const {
    grad = input_gradient(img, class_index);
    return predict(img)[class_index];
  }

  int argmax(const Image& img) const;

 protected:
  void check_input(const Image& img) const;
};

struct TrainOptions {
  double lr = 0.05;
  double momentum = 0.9;
  int batch_size = 32;
  // Uniform pixel noise added to a fraction of the training inputs; makes the
  // classifier robust against sparse off-manifold reconstructions instead of
  // rewarding them with spurious confidence.
  double augment_noise = 0.15;
  double augment_fraction = 0.5;
};

struct TrainStats {
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int epochs_run = 0;
};

// Two 5x5 stride-2 convolutions with rectifier activations, global average
// pooling, an affine layer, and a softmax. All differentiation is manual.
class TinyConvNet final : public Classifier {
 public:
  TinyConvNet(int in_h, int in_w, int in_ch = 1, int c1 = 4, int c2 = 8, int classes = 3);

  void init_weights(Rng& rng);

  int input_height() const override { return in_h_; }
  int input_width() const override { return in_w_; }
  int input_channels() const override { return in_ch_; }
  int num_classes() const override { return classes_; }

  std::vector<double> predict(const Image& img) const override;
  Image input_gradient(const Image& img, int class_index) const override;
  double predict_with_gradient(const Image& img, int class_index, Image& grad) const override;

  void save(const std::string& path) const;
  static TinyConvNet load(const std::string& path);

  bool same_weights(const TinyConvNet& o) const;

  struct Params {
    std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
  };
  Params& params() { return params_; }
  const Params& params() const { return params_; }

  int conv1_channels() const { return c1_; }
  int conv2_channels() const { return c2_; }

 private:
  friend struct NetGrads;
  friend TrainStats train(TinyConvNet&, std::span<const SyntheticSample>, int, Rng&,
                          const TrainOptions&, std::span<const SyntheticSample>);

  int in_h_, in_w_, in_ch_, c1_, c2_, classes_;
  int h1_, w1_, h2_, w2_;
  Params params_;
};

// Minibatch SGD with momentum on the cross-entropy loss. Deterministic given
// the rng; requires at least 100 training samples. Divergence (non-finite
// loss) raises Errc::numeric.
TrainStats train(TinyConvNet& model, std::span<const SyntheticSample> data, int epochs, Rng& rng,
                 const TrainOptions& opts = {}, std::span<const SyntheticSample> heldout = {});

double accuracy(const Classifier& model, std::span<const SyntheticSample> data);

// Mean cross-entropy of the current weights over `data`.
double mean_loss(const Classifier& model, std::span<const SyntheticSample> data);

}  // namespace maskx
