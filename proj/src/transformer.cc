// Copyright 2026 The WLAC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wlac/transformer.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "json.hpp"

WLAC_NAMESPACE_BEGIN

namespace {

std::string LayerPrefix(const char* stack, std::size_t i) {
  return std::string(stack) + "." + std::to_string(i) + ".";
}

void AddAttentionShapes(
    std::vector<std::pair<std::string, std::vector<std::size_t>>>& out,
    const std::string& prefix, std::size_t d) {
  for (const char* proj : {"q", "k", "v", "o"}) {
    out.push_back({prefix + proj + ".weight", {d, d}});
    out.push_back({prefix + proj + ".bias", {d}});
  }
}

void AddNormShapes(
    std::vector<std::pair<std::string, std::vector<std::size_t>>>& out,
    const std::string& prefix, std::size_t d) {
  out.push_back({prefix + "gamma", {d}});
  out.push_back({prefix + "beta", {d}});
}

void AddFfnShapes(
    std::vector<std::pair<std::string, std::vector<std::size_t>>>& out,
    const std::string& prefix, std::size_t d, std::size_t ff) {
  out.push_back({prefix + "fc1.weight", {d, ff}});
  out.push_back({prefix + "fc1.bias", {ff}});
  out.push_back({prefix + "fc2.weight", {ff, d}});
  out.push_back({prefix + "fc2.bias", {d}});
}

struct NormVars {
  Var gamma, beta;
};

NormVars BindNorm(Tape& t, const ModelParams& p, const std::string& prefix) {
  return {t.Param(prefix + "gamma", p.at(prefix + "gamma")),
          t.Param(prefix + "beta", p.at(prefix + "beta"))};
}

Var Norm(Tape& t, const ModelParams& p, const std::string& prefix, Var x) {
  const NormVars n = BindNorm(t, p, prefix);
  return ops::LayerNorm(t, x, n.gamma, n.beta);
}

Var FeedForward(Tape& t, const ModelParams& p, const std::string& prefix,
                Var x) {
  const auto bind = [&](const std::string& name) {
    return t.Param(prefix + name, p.at(prefix + name));
  };
  Var h = ops::Linear(t, x, bind("fc1.weight"), bind("fc1.bias"));
  h = ops::Relu(t, h);
  return ops::Linear(t, h, bind("fc2.weight"), bind("fc2.bias"));
}

Var MaybeDropout(Tape& t, Var x, const ModelParams& p,
                 const ForwardOptions& opts) {
  if (!opts.train || p.config.dropout <= Real(0)) return x;
  WLAC_CHECK(opts.rng != nullptr, "train-mode dropout needs an rng");
  return ops::Dropout(t, x, p.config.dropout, *opts.rng);
}

const Tensor& CachedPositions(std::size_t max_len, std::size_t d_model) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, Tensor> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = cache.try_emplace({max_len, d_model});
  if (inserted) it->second = SinusoidalPositions(max_len, d_model);
  return it->second;
}

Var EmbedPacked(Tape& t, const ModelParams& p, const PackedSequences& seqs,
                const ForwardOptions& opts) {
  const TransformerConfig& c = p.config;
  Var table = t.Param("embed.weight", p.at("embed.weight"));
  Var x = ops::Embedding(t, table, seqs.ids,
                         std::sqrt(static_cast<Real>(c.d_model)));
  const Tensor& pe = CachedPositions(c.max_len, c.d_model);
  Tensor pos({seqs.ids.size(), c.d_model});
  for (const auto& [off, len] : seqs.spans) {
    WLAC_CHECK(len <= c.max_len, "sequence length " + std::to_string(len) +
                                     " exceeds max_len " +
                                     std::to_string(c.max_len));
    std::copy_n(pe.data(), len * c.d_model, pos.data() + off * c.d_model);
  }
  x = ops::AddConstant(t, x, pos);
  return MaybeDropout(t, x, p, opts);
}

kernels::AttentionLayout SelfLayout(const PackedSequences& seqs,
                                    std::vector<std::uint8_t> key_valid) {
  kernels::AttentionLayout layout;
  layout.key_valid = std::move(key_valid);
  for (const auto& [off, len] : seqs.spans) {
    layout.segments.push_back({off, len, off, len});
  }
  return layout;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config and parameters

void TransformerConfig::Validate() const {
  if (layers == 0 || heads == 0 || d_model == 0 || d_ff == 0) {
    throw ConfigError("transformer dimensions must be positive");
  }
  if (d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) +
                      " is not divisible by heads " + std::to_string(heads));
  }
  if (!(dropout >= Real(0) && dropout < Real(1))) {
    throw ConfigError("dropout must be in [0, 1)");
  }
  if (vocab_size == 0 || output_size == 0 || max_len == 0) {
    throw ConfigError("vocab_size, output_size and max_len must be positive");
  }
}

TransformerConfig DeskPreset(std::size_t vocab_size) {
  TransformerConfig c;
  c.vocab_size = vocab_size;
  c.output_size = vocab_size;
  return c;
}

const Tensor& ModelParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  WLAC_CHECK(it != tensors.end(), "unknown parameter " + name);
  return it->second;
}

Tensor& ModelParams::at(const std::string& name) {
  auto it = tensors.find(name);
  WLAC_CHECK(it != tensors.end(), "unknown parameter " + name);
  return it->second;
}

std::size_t ModelParams::NumValues() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> ParamShapes(
    const TransformerConfig& c) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  const std::size_t d = c.d_model;
  out.push_back({"embed.weight", {c.vocab_size, d}});
  for (std::size_t i = 0; i < c.layers; ++i) {
    const std::string enc = LayerPrefix("enc", i);
    AddAttentionShapes(out, enc + "self_attn.", d);
    AddNormShapes(out, enc + "ln1.", d);
    AddNormShapes(out, enc + "ln2.", d);
    AddFfnShapes(out, enc + "ffn.", d, c.d_ff);
    const std::string dec = LayerPrefix("dec", i);
    AddAttentionShapes(out, dec + "self_attn.", d);
    AddAttentionShapes(out, dec + "cross_attn.", d);
    AddNormShapes(out, dec + "ln1.", d);
    AddNormShapes(out, dec + "ln2.", d);
    AddNormShapes(out, dec + "ln3.", d);
    AddFfnShapes(out, dec + "ffn.", d, c.d_ff);
  }
  AddNormShapes(out, "enc.ln.", d);
  AddNormShapes(out, "dec.ln.", d);
  out.push_back({"out.weight", {d, c.output_size}});
  out.push_back({"out.bias", {c.output_size}});
  std::sort(out.begin(), out.end());
  return out;
}

ModelParams InitParams(const TransformerConfig& config, std::uint64_t seed) {
  config.Validate();
  ModelParams p;
  p.config = config;
  std::mt19937_64 rng(seed);
  for (const auto& [name, shape] : ParamShapes(config)) {
    Tensor t(shape);
    const auto ends_with = [&](const char* suffix) {
      const std::size_t n = std::strlen(suffix);
      return name.size() >= n && name.compare(name.size() - n, n, suffix) == 0;
    };
    if (name == "embed.weight") {
      std::normal_distribution<double> dist(
          0.0, 1.0 / std::sqrt(static_cast<double>(config.d_model)));
      for (Real& v : t.storage()) v = static_cast<Real>(dist(rng));
    } else if (ends_with(".weight")) {
      const double limit =
          std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Real& v : t.storage()) v = static_cast<Real>(dist(rng));
    } else if (ends_with("gamma")) {
      t.Fill(Real(1));
    }
    p.tensors.emplace(name, std::move(t));
  }
  return p;
}

void CheckParams(const ModelParams& params) {
  params.config.Validate();
  const auto shapes = ParamShapes(params.config);
  WLAC_CHECK(shapes.size() == params.tensors.size(),
             "parameter count does not match config");
  for (const auto& [name, shape] : shapes) {
    auto it = params.tensors.find(name);
    WLAC_CHECK(it != params.tensors.end(), "missing parameter " + name);
    WLAC_CHECK(it->second.shape() == shape,
               "parameter " + name + " has shape " + it->second.ShapeString() +
                   ", config implies " + ShapeString(shape));
  }
}

std::size_t PackedSequences::Add(const std::vector<int>& seq) {
  const std::size_t offset = ids.size();
  spans.emplace_back(offset, seq.size());
  ids.insert(ids.end(), seq.begin(), seq.end());
  return offset;
}

Tensor SinusoidalPositions(std::size_t max_len, std::size_t d_model) {
  Tensor pe({max_len, d_model});
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    for (std::size_t i = 0; i < d_model; i += 2) {
      const double freq =
          std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d_model));
      pe.at(pos, i) = static_cast<Real>(std::sin(pos * freq));
      if (i + 1 < d_model) pe.at(pos, i + 1) = static_cast<Real>(std::cos(pos * freq));
    }
  }
  return pe;
}

// ---------------------------------------------------------------------------
// Graph construction

AttentionVars BindAttention(Tape& t, const ModelParams& p,
                            const std::string& prefix) {
  const auto bind = [&](const std::string& name) {
    return t.Param(prefix + name, p.at(prefix + name));
  };
  return {bind("q.weight"), bind("q.bias"), bind("k.weight"), bind("k.bias"),
          bind("v.weight"), bind("v.bias"), bind("o.weight"), bind("o.bias")};
}

Var MultiHeadAttention(Tape& t, const AttentionVars& w, Var q_in, Var kv_in,
                       std::size_t heads, const kernels::AttentionLayout& layout,
                       std::vector<Real>* probs_out) {
  Var q = ops::Linear(t, q_in, w.wq, w.bq);
  Var k = ops::Linear(t, kv_in, w.wk, w.bk);
  Var v = ops::Linear(t, kv_in, w.wv, w.bv);
  Var a = ops::Attention(t, q, k, v, heads, layout, probs_out);
  return ops::Linear(t, a, w.wo, w.bo);
}

Var EncodeGraph(Tape& t, const ModelParams& p, const PackedSequences& src,
                const std::vector<std::uint8_t>& key_valid,
                const ForwardOptions& opts) {
  const TransformerConfig& c = p.config;
  Var x = EmbedPacked(t, p, src, opts);
  const kernels::AttentionLayout layout = SelfLayout(src, key_valid);
  for (std::size_t i = 0; i < c.layers; ++i) {
    const std::string pre = LayerPrefix("enc", i);
    Var h = Norm(t, p, pre + "ln1.", x);
    h = MultiHeadAttention(t, BindAttention(t, p, pre + "self_attn."), h, h,
                           c.heads, layout);
    x = ops::Add(t, x, MaybeDropout(t, h, p, opts));
    h = Norm(t, p, pre + "ln2.", x);
    h = FeedForward(t, p, pre + "ffn.", h);
    x = ops::Add(t, x, MaybeDropout(t, h, p, opts));
  }
  return Norm(t, p, "enc.ln.", x);
}

Var DecodeGraph(Tape& t, const ModelParams& p, const PackedSequences& dec,
                const PackedSequences& src, Var memory,
                const DecodeLayout& layout, const ForwardOptions& opts) {
  const TransformerConfig& c = p.config;
  WLAC_CHECK(layout.dec_to_src.size() == dec.size(),
             "every decoder sequence needs a source span");
  Var x = EmbedPacked(t, p, dec, opts);
  kernels::AttentionLayout self = SelfLayout(dec, layout.self_key_valid);
  self.dense_mask = layout.self_dense_mask;
  kernels::AttentionLayout cross;
  cross.key_valid = layout.cross_key_valid;
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const std::size_t s = layout.dec_to_src[i];
    WLAC_CHECK(s < src.size(), "decoder sequence mapped to missing source");
    cross.segments.push_back({dec.spans[i].first, dec.spans[i].second,
                              src.spans[s].first, src.spans[s].second});
  }
  if (opts.trace != nullptr) {
    opts.trace->cross_layout = cross;
    opts.trace->cross_probs.assign(c.layers, {});
    opts.trace->cross_query_inputs.assign(c.layers, Tensor());
    opts.trace->memory = t.value(memory);
  }
  for (std::size_t i = 0; i < c.layers; ++i) {
    const std::string pre = LayerPrefix("dec", i);
    Var h = Norm(t, p, pre + "ln1.", x);
    h = MultiHeadAttention(t, BindAttention(t, p, pre + "self_attn."), h, h,
                           c.heads, self);
    x = ops::Add(t, x, MaybeDropout(t, h, p, opts));
    h = Norm(t, p, pre + "ln2.", x);
    std::vector<Real>* probs_out = nullptr;
    if (opts.trace != nullptr) {
      opts.trace->cross_query_inputs[i] = t.value(h);
      probs_out = &opts.trace->cross_probs[i];
    }
    h = MultiHeadAttention(t, BindAttention(t, p, pre + "cross_attn."), h,
                           memory, c.heads, cross, probs_out);
    x = ops::Add(t, x, MaybeDropout(t, h, p, opts));
    h = Norm(t, p, pre + "ln3.", x);
    h = FeedForward(t, p, pre + "ffn.", h);
    x = ops::Add(t, x, MaybeDropout(t, h, p, opts));
  }
  return Norm(t, p, "dec.ln.", x);
}

Var OutputLogits(Tape& t, const ModelParams& p, Var hidden) {
  return ops::Linear(t, hidden, t.Param("out.weight", p.at("out.weight")),
                     t.Param("out.bias", p.at("out.bias")));
}

Tensor Encode(const ModelParams& p, const std::vector<int>& src_ids,
              const std::vector<bool>& pad_mask) {
  WLAC_CHECK(!src_ids.empty(), "empty source sequence");
  WLAC_CHECK(pad_mask.empty() || pad_mask.size() == src_ids.size(),
             "pad mask length must equal source length");
  Tape t(false);
  PackedSequences src;
  src.Add(src_ids);
  std::vector<std::uint8_t> valid;
  if (!pad_mask.empty()) {
    for (bool pad : pad_mask) valid.push_back(pad ? 0 : 1);
  }
  return t.value(EncodeGraph(t, p, src, valid, {}));
}

Tensor Decode(const ModelParams& p, const std::vector<int>& dec_ids,
              const Tensor& enc_out, const std::vector<bool>& self_mask,
              const std::vector<bool>& cross_mask, AttentionTrace* trace) {
  WLAC_CHECK(!dec_ids.empty(), "empty decoder sequence");
  WLAC_CHECK(enc_out.cols() == p.config.d_model,
             "encoder output width does not match model");
  WLAC_CHECK(self_mask.empty() || self_mask.size() == dec_ids.size() * dec_ids.size(),
             "self mask must be dec_len x dec_len");
  WLAC_CHECK(cross_mask.empty() || cross_mask.size() == enc_out.rows(),
             "cross mask must have one entry per source position");
  Tape t(false);
  PackedSequences dec;
  dec.Add(dec_ids);
  PackedSequences src;
  src.spans.emplace_back(0, enc_out.rows());
  DecodeLayout layout;
  layout.dec_to_src = {0};
  for (bool b : self_mask) layout.self_dense_mask.push_back(b ? 1 : 0);
  for (bool b : cross_mask) layout.cross_key_valid.push_back(b ? 1 : 0);
  ForwardOptions opts;
  opts.trace = trace;
  Var memory = t.Constant(enc_out);
  Var h = DecodeGraph(t, p, dec, src, memory, layout, opts);
  return t.value(OutputLogits(t, p, h));
}

// ---------------------------------------------------------------------------
// Adam

void AdamUpdate(ModelParams& params, const Gradients& grads, AdamState& state,
                double lr, const AdamConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (auto& [name, value] : params.tensors) {
    Tensor& m = state.m[name];
    Tensor& v = state.v[name];
    if (m.empty()) m = Tensor(value.shape());
    if (v.empty()) v = Tensor(value.shape());
    WLAC_CHECK(m.SameShape(value) && v.SameShape(value),
               "optimizer state shape mismatch for " + name);
    auto git = grads.find(name);
    const Tensor* g = git == grads.end() ? nullptr : &git->second;
    if (g != nullptr) {
      WLAC_CHECK(g->SameShape(value), "gradient shape mismatch for " + name);
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double gi = g == nullptr ? 0.0 : static_cast<double>((*g)[i]);
      const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      m[i] = static_cast<Real>(mi);
      v[i] = static_cast<Real>(vi);
      const double update = lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps);
      value[i] = static_cast<Real>(value[i] - update);
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'W', 'L', 'A', 'C', 'C', 'K', 'P', 'T'};

template <typename T>
void Put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw InputError("truncated checkpoint");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void PutArray(std::string& out, const std::string& name, const Tensor& t) {
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) Put<std::uint64_t>(out, d);
  out.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(Real));
}

nlohmann::json ConfigJson(const TransformerConfig& c) {
  return {{"layers", c.layers},         {"heads", c.heads},
          {"d_model", c.d_model},       {"d_ff", c.d_ff},
          {"dropout", static_cast<double>(c.dropout)},
          {"max_len", c.max_len},       {"vocab_size", c.vocab_size},
          {"output_size", c.output_size}};
}

TransformerConfig ConfigFrom(const nlohmann::json& j) {
  TransformerConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.dropout = static_cast<Real>(j.at("dropout").get<double>());
  c.max_len = j.at("max_len").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.output_size = j.at("output_size").get<std::size_t>();
  return c;
}

}  // namespace

std::string ConfigToJson(const TransformerConfig& config) {
  return ConfigJson(config).dump();
}

TransformerConfig ConfigFromJson(const std::string& json) {
  try {
    return ConfigFrom(nlohmann::json::parse(json));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad transformer config: ") + e.what());
  }
}

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  CheckParams(ckpt.params);
  std::map<std::string, const Tensor*> arrays;
  for (const auto& [name, t] : ckpt.params.tensors) arrays[name] = &t;
  if (ckpt.optimizer) {
    for (const auto& [name, t] : ckpt.optimizer->m) arrays["adam.m." + name] = &t;
    for (const auto& [name, t] : ckpt.optimizer->v) arrays["adam.v." + name] = &t;
  }
  nlohmann::json header = {{"format_version", kCheckpointVersion},
                           {"config", ConfigJson(ckpt.params.config)},
                           {"step", ckpt.step}};
  if (ckpt.optimizer) header["optimizer_step"] = ckpt.optimizer->step;
  const std::string header_text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  Put<std::uint32_t>(out, kCheckpointVersion);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  Put<std::uint8_t>(out, static_cast<std::uint8_t>(sizeof(Real)));
  Put<std::uint64_t>(out, arrays.size());
  for (const auto& [name, t] : arrays) PutArray(out, name, *t);
  return out;
}

Checkpoint DeserializeCheckpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.Bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw InputError("not a checkpoint file (bad magic)");
  }
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw InputError("unsupported checkpoint version " + std::to_string(version));
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.Bytes(r.Get<std::uint32_t>()));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad checkpoint header: ") + e.what());
  }
  Checkpoint ckpt;
  ckpt.params.config = ConfigFrom(header.at("config"));
  ckpt.step = header.at("step").get<std::int64_t>();
  const auto value_bytes = r.Get<std::uint8_t>();
  if (value_bytes != 4 && value_bytes != 8) {
    throw InputError("unsupported checkpoint value width");
  }
  const auto count = r.Get<std::uint64_t>();
  for (std::uint64_t a = 0; a < count; ++a) {
    const std::string name = r.Bytes(r.Get<std::uint32_t>());
    const auto rank = r.Get<std::uint32_t>();
    if (rank != 1 && rank != 2) throw InputError("bad array rank in " + name);
    std::vector<std::size_t> shape;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape.push_back(static_cast<std::size_t>(r.Get<std::uint64_t>()));
    }
    Tensor t(shape);
    const std::string raw = r.Bytes(t.size() * value_bytes);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (value_bytes == 4) {
        float f;
        std::memcpy(&f, raw.data() + i * 4, 4);
        t[i] = static_cast<Real>(f);
      } else {
        double d;
        std::memcpy(&d, raw.data() + i * 8, 8);
        t[i] = static_cast<Real>(d);
      }
    }
    if (name.rfind("adam.m.", 0) == 0 || name.rfind("adam.v.", 0) == 0) {
      if (!ckpt.optimizer) ckpt.optimizer.emplace();
      auto& dst = name[5] == 'm' ? ckpt.optimizer->m : ckpt.optimizer->v;
      dst.emplace(name.substr(7), std::move(t));
    } else {
      ckpt.params.tensors.emplace(name, std::move(t));
    }
  }
  if (!r.done()) throw InputError("trailing bytes after checkpoint arrays");
  if (ckpt.optimizer) {
    ckpt.optimizer->step = header.value("optimizer_step", ckpt.step);
  }
  try {
    CheckParams(ckpt.params);
  } catch (const ContractError& e) {
    throw InputError(std::string("checkpoint inconsistent with its config: ") +
                     e.what());
  }
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = SerializeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing checkpoint " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return DeserializeCheckpoint(ss.str());
}

WLAC_NAMESPACE_END
