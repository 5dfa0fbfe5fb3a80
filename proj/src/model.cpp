#include "maskx/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace maskx {

namespace {

constexpr int kK = 5, kStride = 2, kPad = 2;

struct ConvDims {
  int in_ch, out_ch, in_h, in_w, out_h, out_w;
};

inline int conv_out(int n) { return (n + 2 * kPad - kK) / kStride + 1; }

// out[oc][oy][ox] = b[oc] + sum w[oc][ic][ky][kx] * in[ic][oy*2+ky-2][ox*2+kx-2]
void conv_forward(const ConvDims& d, const double* w, const double* b, const double* in,
                  double* out) {
  const std::size_t in_plane = std::size_t(d.in_h) * d.in_w;
  const std::size_t out_plane = std::size_t(d.out_h) * d.out_w;
  for (int oc = 0; oc < d.out_ch; ++oc) {
    double* oplane = out + oc * out_plane;
    std::fill(oplane, oplane + out_plane, b[oc]);
    for (int ic = 0; ic < d.in_ch; ++ic) {
      const double* iplane = in + ic * in_plane;
      const double* wk = w + (std::size_t(oc) * d.in_ch + ic) * kK * kK;
      for (int ky = 0; ky < kK; ++ky) {
        const int oy_lo = std::max(0, (kPad - ky + kStride - 1) / kStride);
        const int oy_hi = std::min(d.out_h - 1, (d.in_h - 1 - ky + kPad) / kStride);
        for (int kx = 0; kx < kK; ++kx) {
          const double w0 = wk[ky * kK + kx];
          if (w0 == 0.0) continue;
          const int ox_lo = std::max(0, (kPad - kx + kStride - 1) / kStride);
          const int ox_hi = std::min(d.out_w - 1, (d.in_w - 1 - kx + kPad) / kStride);
          for (int oy = oy_lo; oy <= oy_hi; ++oy) {
            const double* irow = iplane + std::size_t(oy * kStride + ky - kPad) * d.in_w + kx - kPad;
            double* orow = oplane + std::size_t(oy) * d.out_w;
            for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += w0 * irow[ox * kStride];
          }
        }
      }
    }
  }
}

void conv_backward_input(const ConvDims& d, const double* w, const double* dout, double* din) {
  const std::size_t in_plane = std::size_t(d.in_h) * d.in_w;
  const std::size_t out_plane = std::size_t(d.out_h) * d.out_w;
  std::fill(din, din + std::size_t(d.in_ch) * in_plane, 0.0);
  for (int oc = 0; oc < d.out_ch; ++oc) {
    const double* oplane = dout + oc * out_plane;
    for (int ic = 0; ic < d.in_ch; ++ic) {
      double* iplane = din + ic * in_plane;
      const double* wk = w + (std::size_t(oc) * d.in_ch + ic) * kK * kK;
      for (int ky = 0; ky < kK; ++ky) {
        const int oy_lo = std::max(0, (kPad - ky + kStride - 1) / kStride);
        const int oy_hi = std::min(d.out_h - 1, (d.in_h - 1 - ky + kPad) / kStride);
        for (int kx = 0; kx < kK; ++kx) {
          const double w0 = wk[ky * kK + kx];
          if (w0 == 0.0) continue;
          const int ox_lo = std::max(0, (kPad - kx + kStride - 1) / kStride);
          const int ox_hi = std::min(d.out_w - 1, (d.in_w - 1 - kx + kPad) / kStride);
          for (int oy = oy_lo; oy <= oy_hi; ++oy) {
            double* irow = iplane + std::size_t(oy * kStride + ky - kPad) * d.in_w + kx - kPad;
            const double* orow = oplane + std::size_t(oy) * d.out_w;
            for (int ox = ox_lo; ox <= ox_hi; ++ox) irow[ox * kStride] += w0 * orow[ox];
          }
        }
      }
    }
  }
}

void conv_backward_params(const ConvDims& d, const double* in, const double* dout, double* dw,
                          double* db) {
  const std::size_t in_plane = std::size_t(d.in_h) * d.in_w;
  const std::size_t out_plane = std::size_t(d.out_h) * d.out_w;
  for (int oc = 0; oc < d.out_ch; ++oc) {
    const double* oplane = dout + oc * out_plane;
    double acc_b = 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) acc_b += oplane[i];
    db[oc] += acc_b;
    for (int ic = 0; ic < d.in_ch; ++ic) {
      const double* iplane = in + ic * in_plane;
      double* wk = dw + (std::size_t(oc) * d.in_ch + ic) * kK * kK;
      for (int ky = 0; ky < kK; ++ky) {
        const int oy_lo = std::max(0, (kPad - ky + kStride - 1) / kStride);
        const int oy_hi = std::min(d.out_h - 1, (d.in_h - 1 - ky + kPad) / kStride);
        for (int kx = 0; kx < kK; ++kx) {
          const int ox_lo = std::max(0, (kPad - kx + kStride - 1) / kStride);
          const int ox_hi = std::min(d.out_w - 1, (d.in_w - 1 - kx + kPad) / kStride);
          double acc = 0.0;
          for (int oy = oy_lo; oy <= oy_hi; ++oy) {
            const double* irow = iplane + std::size_t(oy * kStride + ky - kPad) * d.in_w + kx - kPad;
            const double* orow = oplane + std::size_t(oy) * d.out_w;
            for (int ox = ox_lo; ox <= ox_hi; ++ox) acc += orow[ox] * irow[ox * kStride];
          }
          wk[ky * kK + kx] += acc;
        }
      }
    }
  }
}

void softmax(std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

}  // namespace

int Classifier::argmax(const Image& img) const {
  const std::vector<double> p = predict(img);
  return int(std::max_element(p.begin(), p.end()) - p.begin());
}

void Classifier::check_input(const Image& img) const {
  require(img.height == input_height() && img.width == input_width() &&
              img.channels == input_channels(),
          Errc::shape_mismatch, "classifier input shape mismatch");
}

TinyConvNet::TinyConvNet(int in_h, int in_w, int in_ch, int c1, int c2, int classes)
    : in_h_(in_h), in_w_(in_w), in_ch_(in_ch), c1_(c1), c2_(c2), classes_(classes) {
  require(in_h >= 16 && in_w >= 16, Errc::invalid_argument, "input too small for two stride-2 convs");
  h1_ = conv_out(in_h);
  w1_ = conv_out(in_w);
  h2_ = conv_out(h1_);
  w2_ = conv_out(w1_);
  params_.conv1_w.assign(std::size_t(c1) * in_ch * kK * kK, 0.0);
  params_.conv1_b.assign(std::size_t(c1), 0.0);
  params_.conv2_w.assign(std::size_t(c2) * c1 * kK * kK, 0.0);
  params_.conv2_b.assign(std::size_t(c2), 0.0);
  params_.fc_w.assign(std::size_t(classes) * c2, 0.0);
  params_.fc_b.assign(std::size_t(classes), 0.0);
}

void TinyConvNet::init_weights(Rng& rng) {
  auto kaiming = [&](std::vector<double>& w, int fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    rng.fill_uniform(-bound, bound, w);
  };
  kaiming(params_.conv1_w, in_ch_ * kK * kK);
  kaiming(params_.conv2_w, c1_ * kK * kK);
  kaiming(params_.fc_w, c2_);
  std::fill(params_.conv1_b.begin(), params_.conv1_b.end(), 0.0);
  std::fill(params_.conv2_b.begin(), params_.conv2_b.end(), 0.0);
  std::fill(params_.fc_b.begin(), params_.fc_b.end(), 0.0);
}

namespace {

struct Activations {
  std::vector<double> z1, a1, z2, a2, feat, probs;
};

}  // namespace

struct NetGrads {
  TinyConvNet::Params g;

  explicit NetGrads(const TinyConvNet& net) {
    g.conv1_w.assign(net.params_.conv1_w.size(), 0.0);
    g.conv1_b.assign(net.params_.conv1_b.size(), 0.0);
    g.conv2_w.assign(net.params_.conv2_w.size(), 0.0);
    g.conv2_b.assign(net.params_.conv2_b.size(), 0.0);
    g.fc_w.assign(net.params_.fc_w.size(), 0.0);
    g.fc_b.assign(net.params_.fc_b.size(), 0.0);
  }
  void zero() {
    auto z = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
    z(g.conv1_w);
    z(g.conv1_b);
    z(g.conv2_w);
    z(g.conv2_b);
    z(g.fc_w);
    z(g.fc_b);
  }
};

namespace {

void forward_pass(const TinyConvNet& net, const TinyConvNet::Params& p, const Image& img,
                  int c1, int c2, int h1, int w1, int h2, int w2, Activations& act) {
  const ConvDims d1{net.input_channels(), c1, net.input_height(), net.input_width(), h1, w1};
  const ConvDims d2{c1, c2, h1, w1, h2, w2};
  act.z1.resize(std::size_t(c1) * h1 * w1);
  act.z2.resize(std::size_t(c2) * h2 * w2);
  conv_forward(d1, p.conv1_w.data(), p.conv1_b.data(), img.data.data(), act.z1.data());
  act.a1 = act.z1;
  for (double& v : act.a1) v = std::max(v, 0.0);
  conv_forward(d2, p.conv2_w.data(), p.conv2_b.data(), act.a1.data(), act.z2.data());
  act.a2 = act.z2;
  for (double& v : act.a2) v = std::max(v, 0.0);

  const std::size_t plane2 = std::size_t(h2) * w2;
  act.feat.assign(std::size_t(c2), 0.0);
  for (int c = 0; c < c2; ++c) {
    const double* src = act.a2.data() + c * plane2;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane2; ++i) acc += src[i];
    act.feat[c] = acc / double(plane2);
  }
  act.probs.assign(p.fc_b.begin(), p.fc_b.end());
  const int classes = int(p.fc_b.size());
  for (int k = 0; k < classes; ++k) {
    double acc = act.probs[k];
    const double* wrow = p.fc_w.data() + std::size_t(k) * c2;
    for (int c = 0; c < c2; ++c) acc += wrow[c] * act.feat[c];
    act.probs[k] = acc;
  }
  softmax(act.probs);
}

// Backward from dlogits to the input image (and optionally parameter grads).
void backward_pass(const TinyConvNet& net, const TinyConvNet::Params& p, const Image& img,
                   const Activations& act, const std::vector<double>& dlogits, int c1, int c2,
                   int h1, int w1, int h2, int w2, Image* dinput, NetGrads* grads) {
  const int classes = int(p.fc_b.size());
  const std::size_t plane2 = std::size_t(h2) * w2;

  std::vector<double> dfeat(std::size_t(c2), 0.0);
  for (int k = 0; k < classes; ++k) {
    const double* wrow = p.fc_w.data() + std::size_t(k) * c2;
    for (int c = 0; c < c2; ++c) dfeat[c] += wrow[c] * dlogits[k];
  }
  if (grads) {
    for (int k = 0; k < classes; ++k) {
      grads->g.fc_b[k] += dlogits[k];
      double* gw = grads->g.fc_w.data() + std::size_t(k) * c2;
      for (int c = 0; c < c2; ++c) gw[c] += dlogits[k] * act.feat[c];
    }
  }

  std::vector<double> dz2(std::size_t(c2) * plane2);
  for (int c = 0; c < c2; ++c) {
    const double d = dfeat[c] / double(plane2);
    const double* z = act.z2.data() + c * plane2;
    double* dst = dz2.data() + c * plane2;
    for (std::size_t i = 0; i < plane2; ++i) dst[i] = (z[i] > 0.0) ? d : 0.0;
  }

  const ConvDims d2{c1, c2, h1, w1, h2, w2};
  const ConvDims d1{net.input_channels(), c1, net.input_height(), net.input_width(), h1, w1};

  std::vector<double> da1(act.a1.size());
  conv_backward_input(d2, p.conv2_w.data(), dz2.data(), da1.data());
  if (grads)
    conv_backward_params(d2, act.a1.data(), dz2.data(), grads->g.conv2_w.data(),
                         grads->g.conv2_b.data());

  for (std::size_t i = 0; i < da1.size(); ++i)
    if (act.z1[i] <= 0.0) da1[i] = 0.0;

  if (dinput) {
    *dinput = Image(net.input_height(), net.input_width(), net.input_channels());
    conv_backward_input(d1, p.conv1_w.data(), da1.data(), dinput->data.data());
  }
  if (grads)
    conv_backward_params(d1, img.data.data(), da1.data(), grads->g.conv1_w.data(),
                         grads->g.conv1_b.data());
}

}  // namespace

std::vector<double> TinyConvNet::predict(const Image& img) const {
  check_input(img);
  Activations act;
  forward_pass(*this, params_, img, c1_, c2_, h1_, w1_, h2_, w2_, act);
  return act.probs;
}

double TinyConvNet::predict_with_gradient(const Image& img, int class_index, Image& grad) const {
  check_input(img);
  require(class_index >= 0 && class_index < classes_, Errc::invalid_argument, "invalid class");
  Activations act;
  forward_pass(*this, params_, img, c1_, c2_, h1_, w1_, h2_, w2_, act);
  // d(prob_c)/d(logit_j) = p_c (delta_cj - p_j)
  std::vector<double> dlogits(static_cast<std::size_t>(classes_));
  const double pc = act.probs[class_index];
  for (int j = 0; j < classes_; ++j)
    dlogits[j] = pc * ((j == class_index ? 1.0 : 0.0) - act.probs[j]);
  backward_pass(*this, params_, img, act, dlogits, c1_, c2_, h1_, w1_, h2_, w2_, &grad, nullptr);
  return pc;
}

Image TinyConvNet::input_gradient(const Image& img, int class_index) const {
  Image grad;
  predict_with_gradient(img, class_index, grad);
  return grad;
}

bool TinyConvNet::same_weights(const TinyConvNet& o) const {
  return params_.conv1_w == o.params_.conv1_w && params_.conv1_b == o.params_.conv1_b &&
         params_.conv2_w == o.params_.conv2_w && params_.conv2_b == o.params_.conv2_b &&
         params_.fc_w == o.params_.fc_w && params_.fc_b == o.params_.fc_b;
}

void TinyConvNet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io, "cannot open checkpoint for writing: " + path);
  const std::uint32_t header[10] = {0x314D584Du,  // "MXM1"
                                    1u,
                                    std::uint32_t(in_h_),
                                    std::uint32_t(in_w_),
                                    std::uint32_t(in_ch_),
                                    std::uint32_t(c1_),
                                    std::uint32_t(c2_),
                                    std::uint32_t(classes_),
                                    std::uint32_t(kK),
                                    std::uint32_t(kStride)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto* v : {&params_.conv1_w, &params_.conv1_b, &params_.conv2_w, &params_.conv2_b,
                        &params_.fc_w, &params_.fc_b})
    out.write(reinterpret_cast<const char*>(v->data()), std::streamsize(v->size() * sizeof(double)));
  require(out.good(), Errc::io, "checkpoint write failed: " + path);
}

TinyConvNet TinyConvNet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot open checkpoint: " + path);
  std::uint32_t header[10];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  require(in.good() && header[0] == 0x314D584Du, Errc::format, "not a model checkpoint: " + path);
  require(header[1] == 1u, Errc::format, "unsupported checkpoint version");
  require(header[8] == kK && header[9] == kStride, Errc::format, "incompatible architecture");
  TinyConvNet net(static_cast<int>(header[2]), static_cast<int>(header[3]),
                  static_cast<int>(header[4]), static_cast<int>(header[5]),
                  static_cast<int>(header[6]), static_cast<int>(header[7]));
  for (auto* v : {&net.params_.conv1_w, &net.params_.conv1_b, &net.params_.conv2_w,
                  &net.params_.conv2_b, &net.params_.fc_w, &net.params_.fc_b})
    in.read(reinterpret_cast<char*>(v->data()), std::streamsize(v->size() * sizeof(double)));
  require(in.good(), Errc::format, "truncated checkpoint: " + path);
  return net;
}

double accuracy(const Classifier& model, std::span<const SyntheticSample> data) {
  if (data.empty()) return 0.0;
  int hits = 0;
  for (const auto& s : data) hits += (model.argmax(s.image) == s.label) ? 1 : 0;
  return double(hits) / double(data.size());
}

double mean_loss(const Classifier& model, std::span<const SyntheticSample> data) {
  require(!data.empty(), Errc::invalid_argument, "mean_loss on empty data");
  double loss = 0.0;
  for (const auto& s : data)
    loss += -std::log(std::max(model.predict(s.image)[s.label], 1e-300));
  return loss / double(data.size());
}

TrainStats train(TinyConvNet& model, std::span<const SyntheticSample> data, int epochs, Rng& rng,
                 const TrainOptions& opts, std::span<const SyntheticSample> heldout) {
  require(data.size() >= 100, Errc::invalid_argument, "training requires at least 100 samples");
  require(epochs >= 0, Errc::invalid_argument, "negative epoch count");
  for (const auto& s : data)
    require(s.label >= 0 && s.label < model.num_classes(), Errc::invalid_argument,
            "label out of range");

  TrainStats stats;
  Activations act;

  auto sample_loss = [&](const SyntheticSample& s) {
    forward_pass(model, model.params_, s.image, model.c1_, model.c2_, model.h1_, model.w1_,
                 model.h2_, model.w2_, act);
    return -std::log(std::max(act.probs[s.label], 1e-300));
  };

  double init_loss = 0.0;
  for (const auto& s : data) init_loss += sample_loss(s);
  stats.initial_loss = init_loss / double(data.size());

  NetGrads grads(model);
  NetGrads velocity(model);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_below(i)]);

    double epoch_loss = 0.0;
    Image noisy;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(opts.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(opts.batch_size));
      const double inv_batch = 1.0 / double(end - start);
      grads.zero();
      for (std::size_t i = start; i < end; ++i) {
        const SyntheticSample& s = data[order[i]];
        const Image* input = &s.image;
        if (opts.augment_noise > 0.0 && rng.next_double() < opts.augment_fraction) {
          noisy = s.image;
          for (double& v : noisy.data)
            v += rng.uniform(-opts.augment_noise, opts.augment_noise);
          input = &noisy;
        }
        forward_pass(model, model.params_, *input, model.c1_, model.c2_, model.h1_, model.w1_,
                     model.h2_, model.w2_, act);
        epoch_loss += -std::log(std::max(act.probs[s.label], 1e-300));
        std::vector<double> dlogits(act.probs);
        dlogits[s.label] -= 1.0;
        for (double& d : dlogits) d *= inv_batch;
        backward_pass(model, model.params_, *input, act, dlogits, model.c1_, model.c2_, model.h1_,
                      model.w1_, model.h2_, model.w2_, nullptr, &grads);
      }
      auto update = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = opts.momentum * v[i] - opts.lr * g[i];
          w[i] += v[i];
        }
      };
      update(model.params_.conv1_w, velocity.g.conv1_w, grads.g.conv1_w);
      update(model.params_.conv1_b, velocity.g.conv1_b, grads.g.conv1_b);
      update(model.params_.conv2_w, velocity.g.conv2_w, grads.g.conv2_w);
      update(model.params_.conv2_b, velocity.g.conv2_b, grads.g.conv2_b);
      update(model.params_.fc_w, velocity.g.fc_w, grads.g.fc_w);
      update(model.params_.fc_b, velocity.g.fc_b, grads.g.fc_b);
    }
    epoch_loss /= double(data.size());
    require(std::isfinite(epoch_loss), Errc::numeric,
            "training diverged (non-finite loss) at epoch " + std::to_string(epoch + 1));
    stats.epoch_losses.push_back(epoch_loss);
    stats.epochs_run = epoch + 1;
  }

  stats.train_accuracy = accuracy(model, data);
  if (!heldout.empty()) stats.test_accuracy = accuracy(model, heldout);
  return stats;
}

}  // namespace maskx
