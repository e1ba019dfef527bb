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

#include "evs/tam_classifier.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>

#include "byte_io.h"
#include "evs/checkpoint.h"

namespace evs {
namespace {

template <typename T>
BasicTensor<T> uniform_tensor(Shape shape, double limit, std::mt19937_64& rng) {
  BasicTensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

void check_model(const ClassifierModel& model) {
  if (model.head.classifier.weight.empty()) throw ModelError("model has no classifier layer");
  const int width = model.head.classifier.weight.dim(0);
  if (static_cast<std::size_t>(width) != model.labels.size()) {
    throw ModelError("label table has " + std::to_string(model.labels.size()) +
                     " entries but classifier emits " + std::to_string(width));
  }
}

}  // namespace

template <typename T>
TamParamsT<T> TamParamsT<T>::zeros() {
  TamParamsT p;
  for (auto& b : p.branches) {
    b.weight = BasicTensor<T>({1, 2, kTamKernel, kTamKernel});
    b.bias = BasicTensor<T>({1});
  }
  return p;
}

ClassifierModel make_model(const ModelConfig& config) {
  if (config.labels.size() < 2) throw ConfigError("a classifier needs at least two labels");
  if (config.backbone_channels.empty()) throw ConfigError("backbone needs at least one block");
  std::mt19937_64 rng(config.seed);
  ClassifierModel m;
  int c_in = config.input_channels;
  for (int c_out : config.backbone_channels) {
    if (c_out <= 0) throw ConfigError("backbone channel counts must be positive");
    const double fan_in = c_in * 9.0;
    m.backbone.push_back({uniform_tensor<float>({c_out, c_in, 3, 3}, std::sqrt(6.0 / fan_in), rng),
                          Tensor({c_out})});
    c_in = c_out;
  }
  for (auto& b : m.tam.branches) {
    const double fan = 2.0 * kTamKernel * kTamKernel;
    b.weight = uniform_tensor<float>({1, 2, kTamKernel, kTamKernel}, std::sqrt(3.0 / fan), rng);
    b.bias = Tensor({1});
  }
  int width = c_in;
  for (int h : config.head_widths) {
    if (h <= 0) throw ConfigError("head widths must be positive");
    m.head.hidden.push_back(
        {uniform_tensor<float>({h, width}, std::sqrt(6.0 / width), rng), Tensor({h})});
    width = h;
  }
  m.head.bn = {Tensor({width}, 1.0f), Tensor({width}), Tensor({width}), Tensor({width}, 1.0f)};
  const int labels = static_cast<int>(config.labels.size());
  m.head.classifier = {uniform_tensor<float>({labels, width}, std::sqrt(6.0 / (width + labels)), rng),
                       Tensor({labels})};
  m.labels = config.labels;
  return m;
}

template <typename T>
BasicTensor<T> tam_forward(const BasicTensor<T>& psi, const TamParamsT<T>& params) {
  if (psi.rank() != 3) throw ShapeError("tam_forward: expected [C,H,W], got " + shape_string(psi.shape()));
  BasicTensor<T> out(psi.shape());
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& b = params.branches[k];
    BasicTensor<T> pooled = ops::zpool(psi, kTamBranchAxes[k]);
    BasicTensor<T> gate = ops::activation(ops::conv2d(pooled, b.weight, Padding::kSame, &b.bias),
                                          Activation::kSigmoid);
    BasicTensor<T> gated = ops::gate_mul(psi, gate, kTamBranchAxes[k]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += gated[i];
  }
  for (T& v : out.data()) v /= T(3);
  return out;
}

template <typename T>
BasicTensor<T> backbone_forward(const BasicTensor<T>& image,
                                const BasicClassifierModel<T>& model) {
  BasicTensor<T> x = image;
  for (const auto& block : model.backbone) {
    x = ops::conv2d(x, block.weight, Padding::kSame, &block.bias);
    for (T& v : x.data()) v = std::max(v, T(0));
    x = ops::avgpool2x2(x);
  }
  return x;
}

template <typename T>
BasicTensor<T> forward_logits(const BasicTensor<T>& image,
                              const BasicClassifierModel<T>& model) {
  BasicTensor<T> features = ops::global_avg_pool(tam_forward(backbone_forward(image, model), model.tam));
  for (const auto& layer : model.head.hidden) {
    features = ops::activation(ops::dense(features, layer.weight, layer.bias), Activation::kRelu);
  }
  const auto& bn = model.head.bn;
  if (!bn.gamma.empty()) {
    for (std::size_t j = 0; j < features.size(); ++j) {
      const T inv = T(1) / std::sqrt(bn.running_var[j] + T(kBatchNormEps));
      features[j] = bn.gamma[j] * (features[j] - bn.running_mean[j]) * inv + bn.beta[j];
    }
  }
  return ops::dense(features, model.head.classifier.weight, model.head.classifier.bias);
}

std::vector<float> classify(const Tensor& thumbnail, const ClassifierModel& model) {
  if (thumbnail.shape() != Shape{3, kThumbnailHeight, kThumbnailWidth}) {
    throw ShapeError("classify: expected thumbnail [3,90,160], got " +
                     shape_string(thumbnail.shape()));
  }
  check_model(model);
  Tensor probs = ops::activation(forward_logits(thumbnail, model), Activation::kSoftmaxLastAxis);
  return probs.values();
}

Tensor thumbnail_to_tensor(std::span<const std::uint8_t> rgb, int width, int height) {
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  if (width <= 0 || height <= 0 || rgb.size() != plane * 3) {
    throw ShapeError("thumbnail payload of " + std::to_string(rgb.size()) +
                     " bytes does not match " + std::to_string(width) + "x" +
                     std::to_string(height) + " RGB");
  }
  Tensor t({3, height, width});
  auto out = t.data();
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < 3; ++c) out[c * plane + p] = rgb[p * 3 + c] / 255.0f;
  }
  return t;
}

ParamCounts param_count(const ClassifierModel& model) {
  ParamCounts counts;
  model.for_each_param([&](const std::string& name, const Tensor& t) {
    if (name.starts_with("backbone.")) counts.backbone += t.size();
    else if (name.starts_with("tam.")) counts.tam += t.size();
    else counts.head += t.size();
  });
  counts.total = counts.backbone + counts.tam + counts.head;
  return counts;
}

template <typename T>
ForwardPass<T> build_forward(ad::Tape<T>& tape, BasicClassifierModel<T>& model,
                             std::span<const BasicTensor<T>> images, Mode mode,
                             T keep_prob, std::mt19937_64& rng) {
  if (images.empty()) throw ContractError("build_forward: empty batch");
  ForwardPass<T> pass;
  auto param = [&](BasicTensor<T>& t) {
    const ad::NodeId id = tape.parameter(t);
    pass.params.emplace_back(&t, id);
    return id;
  };

  // Registration order follows checkpoint order.
  auto param_pair = [&](BasicTensor<T>& w, BasicTensor<T>& b) {
    const ad::NodeId wid = param(w);
    return std::make_pair(wid, param(b));
  };
  std::vector<std::pair<ad::NodeId, ad::NodeId>> backbone;
  for (auto& block : model.backbone) backbone.push_back(param_pair(block.weight, block.bias));
  std::array<std::pair<ad::NodeId, ad::NodeId>, 3> tam;
  for (std::size_t k = 0; k < 3; ++k) {
    tam[k] = param_pair(model.tam.branches[k].weight, model.tam.branches[k].bias);
  }
  std::vector<std::pair<ad::NodeId, ad::NodeId>> hidden;
  for (auto& layer : model.head.hidden) hidden.push_back(param_pair(layer.weight, layer.bias));
  const bool has_bn = !model.head.bn.gamma.empty();
  ad::NodeId gamma = 0, beta = 0;
  if (has_bn) {
    gamma = param(model.head.bn.gamma);
    beta = param(model.head.bn.beta);
  }
  const auto [cls_w, cls_b] = param_pair(model.head.classifier.weight, model.head.classifier.bias);

  std::vector<ad::NodeId> features;
  for (const auto& image : images) {
    ad::NodeId x = tape.constant(image);
    for (const auto& [w, b] : backbone) {
      x = tape.avgpool2x2(tape.relu(tape.conv2d(x, w, b, Padding::kSame)));
    }
    ad::NodeId attended = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const ad::NodeId gate = tape.sigmoid(
          tape.conv2d(tape.zpool(x, kTamBranchAxes[k]), tam[k].first, tam[k].second, Padding::kSame));
      const ad::NodeId gated = tape.gate_mul(x, gate, kTamBranchAxes[k]);
      attended = k == 0 ? gated : tape.add(attended, gated);
    }
    features.push_back(tape.global_avg_pool(tape.scale(attended, T(1) / T(3))));
  }

  ad::NodeId h = tape.stack(features);
  for (const auto& [w, b] : hidden) {
    h = tape.relu(tape.dense(h, w, b));
    if (mode == Mode::kTrain) h = tape.dropout(h, keep_prob, rng);
  }
  if (has_bn) {
    if (mode == Mode::kTrain) {
      h = tape.batch_norm(h, gamma, beta, T(kBatchNormEps), &pass.bn_batch_mean, &pass.bn_batch_var);
    } else {
      h = tape.affine_norm(h, model.head.bn.running_mean, model.head.bn.running_var, gamma, beta,
                           T(kBatchNormEps));
    }
  }
  pass.logits = tape.dense(h, cls_w, cls_b);
  return pass;
}

TrainResult train(ClassifierModel model, std::span<const LabeledImage> dataset,
                  const TrainConfig& config) {
  check_model(model);
  if (!(config.learning_rate >= 0.0f) || config.epochs <= 0 || config.batch_size <= 0 ||
      !(config.keep_prob > 0.0f && config.keep_prob <= 1.0f)) {
    throw ConfigError("train: learning rate must be >= 0, epochs and batch size positive, "
                      "keep probability in (0,1]");
  }
  const int classes = static_cast<int>(model.labels.size());
  std::vector<int> per_class(static_cast<std::size_t>(classes), 0);
  for (const auto& ex : dataset) {
    if (ex.label < 0 || ex.label >= classes) {
      throw DataError("example label " + std::to_string(ex.label) + " outside label table");
    }
    ++per_class[static_cast<std::size_t>(ex.label)];
  }
  const auto represented = std::count_if(per_class.begin(), per_class.end(), [](int n) { return n > 0; });
  if (represented < 2) throw DataError("training data must cover at least two classes");
  if (represented < classes) throw DataError("every label needs at least one training example");

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult result;
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + bs);
      // A lone trailing example would give BN zero variance; fold it into this batch.
      if (order.size() - end == 1) end = order.size();
      std::vector<Tensor> images;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        images.push_back(dataset[order[i]].image);
        labels.push_back(dataset[order[i]].label);
      }
      ad::Tape<float> tape;
      ForwardPass<float> pass = build_forward<float>(tape, model, images, Mode::kTrain,
                                                     config.keep_prob, rng);
      const ad::NodeId loss = tape.softmax_cross_entropy(pass.logits, labels);
      const auto grads = tape.backward(loss);
      for (auto& [tensor, id] : pass.params) {
        const Tensor& g = grads[id];
        for (std::size_t i = 0; i < tensor->size(); ++i) (*tensor)[i] -= config.learning_rate * g[i];
      }
      auto& bn = model.head.bn;
      if (!bn.gamma.empty()) {
        for (std::size_t j = 0; j < bn.running_mean.size(); ++j) {
          bn.running_mean[j] = kBatchNormMomentum * bn.running_mean[j] +
                               (1.0f - kBatchNormMomentum) * pass.bn_batch_mean[j];
          bn.running_var[j] = kBatchNormMomentum * bn.running_var[j] +
                              (1.0f - kBatchNormMomentum) * pass.bn_batch_var[j];
        }
      }
      loss_sum += static_cast<double>(tape.value(loss)[0]) * static_cast<double>(end - start);
      seen += end - start;
      start = end;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(seen));
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(std::span<const LabeledImage> dataset, const ModelConfig& model_config,
                  const TrainConfig& config) {
  return train(make_model(model_config), dataset, config);
}

double accuracy(const ClassifierModel& model, std::span<const LabeledImage> dataset) {
  if (dataset.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : dataset) {
    const auto probs = classify(ex.image, model);
    const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
    correct += best == ex.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

std::vector<std::uint8_t> save_model(const ClassifierModel& model) {
  check_model(model);
  std::vector<NamedTensor> tensors;
  model.for_each_param([&](const std::string& name, const Tensor& t) { tensors.push_back({name, t}); });
  const_cast<ClassifierModel&>(model).for_each_buffer(
      [&](const std::string& name, Tensor& t) { tensors.push_back({name, t}); });
  io::ByteWriter w;
  w.bytes(encode_checkpoint(tensors));
  w.u32(static_cast<std::uint32_t>(model.labels.size()));
  for (const auto& label : model.labels) w.string16(label);
  return w.take();
}

ClassifierModel load_model(std::span<const std::uint8_t> bytes) {
  std::size_t used = 0;
  std::vector<NamedTensor> tensors = decode_checkpoint(bytes, &used);
  io::ByteReader r(bytes.subspan(used));
  const std::uint32_t count = r.u32();
  if (count > r.remaining()) throw FormatError("implausible label count", used);
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < count; ++i) labels.push_back(r.string16());
  if (!r.done()) throw FormatError("trailing bytes after label table", used + r.offset());

  std::map<std::string, Tensor> by_name;
  for (auto& nt : tensors) {
    if (!by_name.emplace(nt.name, std::move(nt.tensor)).second) {
      throw ModelError("duplicate tensor " + nt.name);
    }
  }
  auto take = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ModelError("checkpoint is missing " + name);
    Tensor t = std::move(it->second);
    by_name.erase(it);
    return t;
  };

  ClassifierModel m;
  m.labels = std::move(labels);
  for (int i = 0; by_name.count("backbone." + std::to_string(i) + ".weight"); ++i) {
    const std::string p = "backbone." + std::to_string(i);
    m.backbone.push_back({take(p + ".weight"), take(p + ".bias")});
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const std::string p = "tam.b" + std::to_string(k + 1);
    if (!by_name.count(p + ".weight")) continue;
    m.tam.branches[k] = {take(p + ".weight"), take(p + ".bias")};
  }
  for (int i = 1; by_name.count("head.dense" + std::to_string(i) + ".weight"); ++i) {
    const std::string p = "head.dense" + std::to_string(i);
    m.head.hidden.push_back({take(p + ".weight"), take(p + ".bias")});
  }
  if (by_name.count("head.bn.gamma")) {
    m.head.bn = {take("head.bn.gamma"), take("head.bn.beta"), take("head.bn.running_mean"),
                 take("head.bn.running_var")};
  }
  if (by_name.count("head.classifier.weight")) {
    m.head.classifier = {take("head.classifier.weight"), take("head.classifier.bias")};
  }
  if (!by_name.empty()) throw ModelError("unexpected tensor " + by_name.begin()->first);

  // Layer-to-layer shape agreement.
  int c = -1;
  for (const auto& b : m.backbone) {
    if (b.weight.rank() != 4 || b.bias.shape() != Shape{b.weight.dim(0)} ||
        (c >= 0 && b.weight.dim(1) != c)) {
      throw ModelError("inconsistent backbone block " + shape_string(b.weight.shape()));
    }
    c = b.weight.dim(0);
  }
  for (const auto& b : m.tam.branches) {
    if (!b.weight.empty() && (b.weight.shape() != Shape{1, 2, kTamKernel, kTamKernel} ||
                              b.bias.shape() != Shape{1})) {
      throw ModelError("attention branch has shape " + shape_string(b.weight.shape()));
    }
  }
  int width = c;
  for (const auto& d : m.head.hidden) {
    if (d.weight.rank() != 2 || (width >= 0 && d.weight.dim(1) != width) ||
        d.bias.shape() != Shape{d.weight.dim(0)}) {
      throw ModelError("inconsistent dense layer " + shape_string(d.weight.shape()));
    }
    width = d.weight.dim(0);
  }
  if (!m.head.bn.gamma.empty() && m.head.bn.gamma.shape() != Shape{width}) {
    throw ModelError("batch norm width " + shape_string(m.head.bn.gamma.shape()));
  }
  if (!m.head.classifier.weight.empty()) {
    if (m.head.classifier.weight.dim(1) != width) {
      throw ModelError("classifier input " + shape_string(m.head.classifier.weight.shape()));
    }
    check_model(m);
  }
  return m;
}

void save_model_file(const ClassifierModel& model, const std::filesystem::path& path) {
  const auto bytes = save_model(model);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write model to " + path.string());
}

ClassifierModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_model(bytes);
}

#define EVS_INSTANTIATE(T)                                                                 \
  template struct TamParamsT<T>;                                                           \
  template BasicTensor<T> tam_forward(const BasicTensor<T>&, const TamParamsT<T>&);        \
  template BasicTensor<T> backbone_forward(const BasicTensor<T>&,                          \
                                           const BasicClassifierModel<T>&);                \
  template BasicTensor<T> forward_logits(const BasicTensor<T>&,                            \
                                         const BasicClassifierModel<T>&);                  \
  template ForwardPass<T> build_forward(ad::Tape<T>&, BasicClassifierModel<T>&,            \
                                        std::span<const BasicTensor<T>>, Mode, T,          \
                                        std::mt19937_64&);

EVS_INSTANTIATE(float)
EVS_INSTANTIATE(double)

#undef EVS_INSTANTIATE

}  // namespace evs
