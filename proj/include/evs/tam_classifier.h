// Copyright 2026 The evs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EVS_TAM_CLASSIFIER_H_
#define EVS_TAM_CLASSIFIER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evs/autodiff.h"
#include "evs/tensor.h"

namespace evs {

inline constexpr int kThumbnailWidth = 160;
inline constexpr int kThumbnailHeight = 90;
inline constexpr int kTamKernel = 7;

template <typename T>
struct ConvParams {
  BasicTensor<T> weight;  // [C_out, C_in, k, k]
  BasicTensor<T> bias;    // [C_out]
};

template <typename T>
struct DenseParams {
  BasicTensor<T> weight;  // [out, in]
  BasicTensor<T> bias;    // [out]
};

// Three attention branches, indexed by the axis they pool over:
//   branches[0]  pools H -> width-channel map [1,C,W]
//   branches[1]  pools W -> height-channel map [1,C,H]
//   branches[2]  pools C -> height-width map [1,H,W]
// Each conv maps the 2-channel Z-pool to 1 channel with a 7x7 kernel.
template <typename T>
struct TamParamsT {
  std::array<ConvParams<T>, 3> branches;

  static TamParamsT zeros();
};

inline constexpr std::array<Axis, 3> kTamBranchAxes = {Axis::kH, Axis::kW, Axis::kC};

template <typename T>
struct BatchNormParams {
  BasicTensor<T> gamma, beta;
  BasicTensor<T> running_mean, running_var;  // buffers, not trained
};

template <typename T>
struct HeadParams {
  std::vector<DenseParams<T>> hidden;  // each followed by relu and dropout
  BatchNormParams<T> bn;
  DenseParams<T> classifier;

  bool empty() const { return hidden.empty() && classifier.weight.empty(); }
};

inline constexpr float kBatchNormEps = 1e-5f;
inline constexpr float kBatchNormMomentum = 0.9f;

template <typename T>
struct BasicClassifierModel {
  std::vector<ConvParams<T>> backbone;  // conv3x3 -> relu -> avgpool2x2 each
  TamParamsT<T> tam;
  HeadParams<T> head;
  std::vector<std::string> labels;

  // Trainable tensors in checkpoint order.
  template <typename F>
  void for_each_param(F&& f);
  template <typename F>
  void for_each_param(F&& f) const {
    const_cast<BasicClassifierModel*>(this)->for_each_param(
        [&](const std::string& name, BasicTensor<T>& t) { f(name, std::as_const(t)); });
  }
  // Running statistics.
  template <typename F>
  void for_each_buffer(F&& f);

  template <typename U>
  BasicClassifierModel<U> cast() const;
};

using TamParams = TamParamsT<float>;
using ClassifierModel = BasicClassifierModel<float>;

struct ModelConfig {
  std::vector<std::string> labels;
  std::vector<int> backbone_channels = {8, 16, 32};
  std::vector<int> head_widths = {512, 512};
  int input_channels = 3;
  std::uint64_t seed = 1;
};

// Seeded He-uniform init for convs and dense layers, zero biases, unit BN.
ClassifierModel make_model(const ModelConfig& config);

// Ψ -> (Ψ⊙F1 + Ψ⊙F2 + Ψ⊙F3)/3 with Fk = sigmoid(conv7x7(zpool_k(Ψ))).
template <typename T>
BasicTensor<T> tam_forward(const BasicTensor<T>& psi, const TamParamsT<T>& params);

template <typename T>
BasicTensor<T> backbone_forward(const BasicTensor<T>& image,
                                const BasicClassifierModel<T>& model);

// Inference-mode logits for an image of any size the backbone accepts.
template <typename T>
BasicTensor<T> forward_logits(const BasicTensor<T>& image,
                              const BasicClassifierModel<T>& model);

// Probabilities over model.labels for one 3x90x160 thumbnail in [0,1].
std::vector<float> classify(const Tensor& thumbnail, const ClassifierModel& model);

// Interleaved 8-bit RGB rows -> [3,H,W] scaled by 1/255.
Tensor thumbnail_to_tensor(std::span<const std::uint8_t> rgb, int width, int height);

struct ParamCounts {
  std::size_t total = 0;
  std::size_t backbone = 0;
  std::size_t tam = 0;
  std::size_t head = 0;
};

ParamCounts param_count(const ClassifierModel& model);

enum class Mode { kTrain, kInfer };

// Handles to the parameters of one forward pass recorded on a tape.
template <typename T>
struct ForwardPass {
  ad::NodeId logits = 0;  // [B, L]
  std::vector<std::pair<BasicTensor<T>*, ad::NodeId>> params;
  BasicTensor<T> bn_batch_mean, bn_batch_var;  // set in kTrain mode
};

// Records backbone -> TAM -> GAP -> head on `tape` for a batch of images.
// kTrain uses batch statistics in BN and draws dropout masks from rng.
template <typename T>
ForwardPass<T> build_forward(ad::Tape<T>& tape, BasicClassifierModel<T>& model,
                             std::span<const BasicTensor<T>> images, Mode mode,
                             T keep_prob, std::mt19937_64& rng);

struct LabeledImage {
  Tensor image;
  int label = 0;
};

struct TrainConfig {
  float learning_rate = 0.01f;
  int epochs = 20;
  int batch_size = 8;
  std::uint64_t seed = 1;
  float keep_prob = 0.8f;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Plain SGD on mean cross-entropy, starting from `initial`.
TrainResult train(ClassifierModel initial, std::span<const LabeledImage> dataset,
                  const TrainConfig& config);
TrainResult train(std::span<const LabeledImage> dataset, const ModelConfig& model_config,
                  const TrainConfig& config);

double accuracy(const ClassifierModel& model, std::span<const LabeledImage> dataset);

// EVSM tensor section followed by u32 label count and u16-prefixed names.
std::vector<std::uint8_t> save_model(const ClassifierModel& model);
ClassifierModel load_model(std::span<const std::uint8_t> bytes);
void save_model_file(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

template <typename T>
template <typename F>
void BasicClassifierModel<T>::for_each_param(F&& f) {
  for (std::size_t i = 0; i < backbone.size(); ++i) {
    const std::string p = "backbone." + std::to_string(i);
    f(p + ".weight", backbone[i].weight);
    f(p + ".bias", backbone[i].bias);
  }
  for (std::size_t i = 0; i < tam.branches.size(); ++i) {
    const std::string p = "tam.b" + std::to_string(i + 1);
    if (tam.branches[i].weight.empty()) continue;
    f(p + ".weight", tam.branches[i].weight);
    f(p + ".bias", tam.branches[i].bias);
  }
  for (std::size_t i = 0; i < head.hidden.size(); ++i) {
    const std::string p = "head.dense" + std::to_string(i + 1);
    f(p + ".weight", head.hidden[i].weight);
    f(p + ".bias", head.hidden[i].bias);
  }
  if (!head.bn.gamma.empty()) {
    f(std::string("head.bn.gamma"), head.bn.gamma);
    f(std::string("head.bn.beta"), head.bn.beta);
  }
  if (!head.classifier.weight.empty()) {
    f(std::string("head.classifier.weight"), head.classifier.weight);
    f(std::string("head.classifier.bias"), head.classifier.bias);
  }
}

template <typename T>
template <typename F>
void BasicClassifierModel<T>::for_each_buffer(F&& f) {
  if (head.bn.running_mean.empty()) return;
  f(std::string("head.bn.running_mean"), head.bn.running_mean);
  f(std::string("head.bn.running_var"), head.bn.running_var);
}

template <typename T>
template <typename U>
BasicClassifierModel<U> BasicClassifierModel<T>::cast() const {
  auto conv = [](const ConvParams<T>& c) {
    return ConvParams<U>{c.weight.template cast<U>(), c.bias.template cast<U>()};
  };
  auto dense = [](const DenseParams<T>& d) {
    return DenseParams<U>{d.weight.template cast<U>(), d.bias.template cast<U>()};
  };
  BasicClassifierModel<U> out;
  for (const auto& c : backbone) out.backbone.push_back(conv(c));
  for (std::size_t i = 0; i < 3; ++i) out.tam.branches[i] = conv(tam.branches[i]);
  for (const auto& d : head.hidden) out.head.hidden.push_back(dense(d));
  out.head.bn = {head.bn.gamma.template cast<U>(), head.bn.beta.template cast<U>(),
                 head.bn.running_mean.template cast<U>(),
                 head.bn.running_var.template cast<U>()};
  out.head.classifier = dense(head.classifier);
  out.labels = labels;
  return out;
}

}  // namespace evs

#endif  // EVS_TAM_CLASSIFIER_H_
