#include "nli/model/parameters.hpp"

#include <algorithm>
#include <random>

#include "nli/errors.hpp"

namespace nli {

std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<std::pair<std::string, Shape>> layout;
  layout.emplace_back("embedding", Shape{c.embedding_rows(), d});
  for (std::size_t b = 0; b < c.n_blocks; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    layout.emplace_back(p + "qkv_weight", Shape{d, 3 * d});
    layout.emplace_back(p + "qkv_bias", Shape{3 * d});
    layout.emplace_back(p + "out_weight", Shape{d, d});
    layout.emplace_back(p + "out_bias", Shape{d});
    layout.emplace_back(p + "ln1_gain", Shape{d});
    layout.emplace_back(p + "ln1_bias", Shape{d});
    layout.emplace_back(p + "ffn_in_weight", Shape{d, c.d_ffn});
    layout.emplace_back(p + "ffn_in_bias", Shape{c.d_ffn});
    layout.emplace_back(p + "ffn_out_weight", Shape{c.d_ffn, d});
    layout.emplace_back(p + "ffn_out_bias", Shape{d});
    layout.emplace_back(p + "ln2_gain", Shape{d});
    layout.emplace_back(p + "ln2_bias", Shape{d});
  }
  layout.emplace_back("cls_weight", Shape{d, c.n_classes});
  layout.emplace_back("cls_bias", Shape{c.n_classes});
  return layout;
}

namespace {

template <typename Real>
std::vector<Tensor<Real>*> slots(ModelParameters<Real>& p) {
  std::vector<Tensor<Real>*> out{&p.embedding};
  for (auto& b : p.blocks) {
    for (Tensor<Real>* t : {&b.qkv_weight, &b.qkv_bias, &b.out_weight, &b.out_bias, &b.ln1_gain, &b.ln1_bias,
                            &b.ffn_in_weight, &b.ffn_in_bias, &b.ffn_out_weight, &b.ffn_out_bias, &b.ln2_gain,
                            &b.ln2_bias}) {
      out.push_back(t);
    }
  }
  out.push_back(&p.cls_weight);
  out.push_back(&p.cls_bias);
  return out;
}

bool is_gain(const std::string& name) { return name.ends_with("_gain"); }
bool is_bias(const std::string& name) { return name.ends_with("_bias"); }

template <typename Real>
ModelParameters<Real> allocate(const ModelConfig& config) {
  config.validate();
  ModelParameters<Real> p;
  p.blocks.resize(config.n_blocks);
  auto layout = parameter_layout(config);
  auto targets = slots(p);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    *targets[i] = Tensor<Real>(layout[i].second, /*requires_grad=*/true);
    if (is_gain(layout[i].first)) std::fill(targets[i]->mutable_data().begin(), targets[i]->mutable_data().end(), Real(1));
  }
  return p;
}

}  // namespace

template <typename Real>
ModelParameters<Real> ModelParameters<Real>::initialize(const ModelConfig& config, std::uint64_t seed) {
  ModelParameters p = allocate<Real>(config);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, config.init_std);
  auto layout = parameter_layout(config);
  auto targets = slots(p);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& name = layout[i].first;
    if (is_gain(name) || is_bias(name)) continue;
    for (Real& v : targets[i]->mutable_data()) v = static_cast<Real>(normal(rng));
  }
  return p;
}

template <typename Real>
ModelParameters<Real> ModelParameters<Real>::zeros(const ModelConfig& config) {
  return allocate<Real>(config);
}

template <typename Real>
std::vector<std::pair<std::string, Tensor<Real>>> ModelParameters<Real>::named_tensors() const {
  auto& self = const_cast<ModelParameters&>(*this);
  auto targets = slots(self);
  std::vector<std::pair<std::string, Tensor<Real>>> out;
  out.reserve(targets.size());
  std::size_t block = 0, field = 0;
  static constexpr const char* kFields[] = {"qkv_weight",    "qkv_bias",    "out_weight",     "out_bias",
                                            "ln1_gain",      "ln1_bias",    "ffn_in_weight",  "ffn_in_bias",
                                            "ffn_out_weight", "ffn_out_bias", "ln2_gain",      "ln2_bias"};
  out.emplace_back("embedding", embedding);
  for (std::size_t i = 1; i + 2 < targets.size(); ++i) {
    out.emplace_back("blocks." + std::to_string(block) + "." + kFields[field], *targets[i]);
    if (++field == std::size(kFields)) {
      field = 0;
      ++block;
    }
  }
  out.emplace_back("cls_weight", cls_weight);
  out.emplace_back("cls_bias", cls_bias);
  return out;
}

template <typename Real>
std::vector<Tensor<Real>> ModelParameters<Real>::tensors() const {
  auto& self = const_cast<ModelParameters&>(*this);
  std::vector<Tensor<Real>> out;
  for (Tensor<Real>* t : slots(self)) out.push_back(*t);
  return out;
}

template <typename Real>
std::size_t ModelParameters<Real>::enumerated_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

template <typename Real>
void ModelParameters<Real>::check_shapes(const ModelConfig& config) const {
  auto layout = parameter_layout(config);
  auto named = named_tensors();
  if (blocks.size() != config.n_blocks) {
    throw ConfigError("parameters hold " + std::to_string(blocks.size()) + " blocks, config expects " +
                      std::to_string(config.n_blocks));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (named[i].second.shape() != layout[i].second) {
      throw ConfigError("parameter " + layout[i].first + " has shape " + shape_string(named[i].second.shape()) +
                        ", expected " + shape_string(layout[i].second));
    }
  }
}

template <typename Real>
ModelParameters<Real> ModelParameters<Real>::clone() const {
  ModelParameters copy = *this;
  for (Tensor<Real>* t : slots(copy)) *t = t->clone();
  return copy;
}

template <typename Real>
void ModelParameters<Real>::assign(const ModelParameters& other) {
  auto dst = slots(*this);
  auto src = slots(const_cast<ModelParameters&>(other));
  if (dst.size() != src.size()) throw ContractViolation("assign: parameter sets differ in size");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->shape() != src[i]->shape()) throw ContractViolation("assign: parameter shapes differ");
    std::copy(src[i]->data().begin(), src[i]->data().end(), dst[i]->mutable_data().begin());
  }
}

template struct ModelParameters<float>;
template struct ModelParameters<double>;

}  // namespace nli
