#pragma once

// Masked-LM runtime boundary. `Backend` is the abstract surface the
// trainer drives: per-mask vocabulary logits, pooled embeddings, and
// declarative training steps. `ToyBackend` is the reference
// implementation: a single-hidden-layer, position-aware bag-of-tokens
// predictor over a <=64-token vocabulary, small enough for exhaustive
// finite-difference verification yet able to learn planted lexical cues.
//
// Toy forward pass, per input of length L:
//   x_i = emb[t_i] + pe(i)              token + sinusoidal position
//   c   = mean_i x_i                    bag-of-tokens context
//   z_m = W1 [x_m ; c] + b1             per queried position m
//   a_m = tanh(z_m)
//   n_m = gamma * norm(a_m) + beta      layer normalization
//   logits_m = W2 n_m + b2

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "adprompt/loss.hpp"
#include "adprompt/optimizer.hpp"
#include "adprompt/prompting.hpp"
#include "adprompt/types.hpp"

namespace adprompt {

struct BackendDescriptor {
  std::string name;
  int vocab_size = 0;
  int max_len = 512;
  int mask_token_id = -1;
  bool supports_training = false;

  void validate() const {
    if (max_len < 8) throw Error("backend descriptor: max_len must be >= 8");
    if (mask_token_id < 0 || mask_token_id >= vocab_size)
      throw Error("backend descriptor: mask_token_id outside vocabulary");
  }
};

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

enum class Pooling { Begin, Mean };

inline Pooling parse_pooling(std::string_view s) {
  if (s == "begin") return Pooling::Begin;
  if (s == "mean") return Pooling::Mean;
  throw Error("unknown pooling: '" + std::string(s) + "'");
}

struct TrainExample {
  const PromptedInput* input = nullptr;
  const LossSpec* loss = nullptr;
};

struct CheckpointMeta {
  std::string name;
  int epoch = 0;
  std::uint64_t seed = 0;
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;
  virtual MaskLogits forward(const PromptedInput& input) = 0;
  virtual EmbeddingVector embed(const PromptedInput& input) = 0;

  // One optimizer step on a batch (gradients averaged); returns the mean
  // loss. A batch with nothing to learn from (e.g. no masked positions)
  // leaves parameters untouched.
  virtual double train_step(std::span<const TrainExample> batch) = 0;

  virtual std::unique_ptr<Backend> snapshot() const = 0;

  virtual void save_checkpoint(const std::filesystem::path& path,
                               const CheckpointMeta& meta) const {
    (void)path;
    (void)meta;
    throw Error("backend '" + descriptor().name +
                "' does not support checkpoints");
  }

  double train_step(const PromptedInput& input, const LossSpec& loss) {
    TrainExample ex{&input, &loss};
    return train_step(std::span<const TrainExample>(&ex, 1));
  }
};

struct ToyBackendConfig {
  std::string name = "toy";
  int embed_dim = 16;
  int hidden_dim = 32;
  int max_len = 512;
  double init_scale = 0.2;
  double ln_eps = 1e-5;
  Pooling pooling = Pooling::Begin;
  AdamWConfig optimizer{};
  std::set<std::string> decay_groups{"layernorm"};
  std::uint64_t seed = 0;
};

class ToyBackend final : public Backend {
 public:
  using Backend::train_step;

  static constexpr int kMaxVocab = 64;

  ToyBackend(ToyBackendConfig config, int vocab_size, int mask_token_id)
      : config_(std::move(config)), vocab_(vocab_size) {
    if (vocab_size < 4 || vocab_size > kMaxVocab)
      throw Error("toy backend: vocab_size must be in [4, " +
                  std::to_string(kMaxVocab) + "], got " +
                  std::to_string(vocab_size));
    if (config_.embed_dim < 1 || config_.hidden_dim < 2)
      throw Error("toy backend: embed_dim >= 1 and hidden_dim >= 2 required");
    descriptor_ = {config_.name, vocab_size, config_.max_len, mask_token_id,
                   true};
    descriptor_.validate();
    init_position_table();
    init_parameters();
    optimizer_ = AdamW(config_.optimizer);
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  const ToyBackendConfig& config() const { return config_; }

  MaskLogits forward(const PromptedInput& input) override {
    ForwardPass pass = run_forward(input, input.mask_positions);
    MaskLogits out;
    out.positions = input.mask_positions;
    for (const PosState& s : pass.states) out.logits.push_back(s.logits);
    return out;
  }

  EmbeddingVector embed(const PromptedInput& input) override {
    if (input.token_ids.empty()) throw Error("embed: empty input");
    std::vector<std::size_t> positions;
    if (config_.pooling == Pooling::Begin) {
      positions.push_back(0);
    } else {
      positions.resize(input.token_ids.size());
      for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    }
    ForwardPass pass = run_forward(input, positions, /*check_masks=*/false);
    const int h = config_.hidden_dim;
    EmbeddingVector out;
    out.values.assign(static_cast<std::size_t>(h), 0.0);
    for (const PosState& s : pass.states)
      for (int j = 0; j < h; ++j) out.values[static_cast<std::size_t>(j)] += s.n[static_cast<std::size_t>(j)];
    for (double& v : out.values) v /= static_cast<double>(pass.states.size());
    return out;
  }

  double train_step(std::span<const TrainExample> batch) override {
    if (batch.empty()) throw Error("train_step: empty batch");
    Gradients grads = make_zero_gradients();
    double total_loss = 0.0;
    bool any = false;
    for (const TrainExample& ex : batch) {
      LogitGradients logit_grads;
      total_loss += backprop(*ex.input, *ex.loss, &logit_grads, &grads);
      any = any || !logit_grads.empty();
    }
    double mean_loss = total_loss / static_cast<double>(batch.size());
    if (!any) return mean_loss;  // nothing to learn from; parameters stay
    double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (auto& [name, g] : grads.tensors)
      for (double& v : g) v *= inv_batch;
    apply_update(grads);
    return mean_loss;
  }

  // Loss and full parameter gradients without an update; shares every
  // code path with train_step so finite-difference checks cover both.
  std::pair<double, std::map<std::string, std::vector<double>>>
  compute_gradients(const PromptedInput& input, const LossSpec& loss) {
    Gradients grads = make_zero_gradients();
    LogitGradients logit_grads;
    double value = backprop(input, loss, &logit_grads, &grads);
    return {value, std::move(grads.tensors)};
  }

  std::map<std::string, std::vector<double>*> named_parameters() {
    return {{"embedding", &emb_},        {"hidden.w1", &w1_},
            {"hidden.b1", &b1_},         {"layernorm.gamma", &gamma_},
            {"layernorm.beta", &beta_},  {"output.w2", &w2_},
            {"output.b2", &b2_}};
  }

  std::unique_ptr<Backend> snapshot() const override {
    return std::make_unique<ToyBackend>(*this);
  }

  void save_checkpoint(const std::filesystem::path& path,
                       const CheckpointMeta& meta) const override {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write checkpoint: " + path.string());
    os.write(kMagic, 8);
    std::array<std::int32_t, 5> dims{vocab_, config_.embed_dim,
                                     config_.hidden_dim, config_.max_len,
                                     descriptor_.mask_token_id};
    os.write(reinterpret_cast<const char*>(dims.data()),
             static_cast<std::streamsize>(sizeof dims));
    for (const std::vector<double>* t :
         {&emb_, &w1_, &b1_, &gamma_, &beta_, &w2_, &b2_})
      os.write(reinterpret_cast<const char*>(t->data()),
               static_cast<std::streamsize>(t->size() * sizeof(double)));
    std::ofstream side(path.string() + ".meta");
    side << "name=" << descriptor_.name << '\n'
         << "epoch=" << meta.epoch << '\n'
         << "seed=" << meta.seed << '\n'
         << "descriptor=vocab_size:" << vocab_ << " max_len:"
         << config_.max_len << " mask_token_id:" << descriptor_.mask_token_id
         << " supports_training:1\n";
  }

  static ToyBackend load_checkpoint(const std::filesystem::path& path,
                                    ToyBackendConfig config = {}) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read checkpoint: " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
      throw Error("checkpoint: bad magic in " + path.string());
    std::array<std::int32_t, 5> dims{};
    is.read(reinterpret_cast<char*>(dims.data()),
            static_cast<std::streamsize>(sizeof dims));
    config.embed_dim = dims[1];
    config.hidden_dim = dims[2];
    config.max_len = dims[3];
    ToyBackend backend(config, dims[0], dims[4]);
    for (std::vector<double>* t :
         {&backend.emb_, &backend.w1_, &backend.b1_, &backend.gamma_,
          &backend.beta_, &backend.w2_, &backend.b2_})
      is.read(reinterpret_cast<char*>(t->data()),
              static_cast<std::streamsize>(t->size() * sizeof(double)));
    if (!is) throw Error("checkpoint: truncated blob in " + path.string());
    return backend;
  }

 private:
  static constexpr const char* kMagic = "ADPCKPT1";

  struct PosState {
    std::size_t position = 0;
    std::vector<double> u;     // [x_m ; c], 2D
    std::vector<double> a;     // tanh hidden
    std::vector<double> ahat;  // normalized hidden
    std::vector<double> n;     // gamma*ahat + beta
    std::vector<double> logits;
    double inv_sigma = 0.0;
  };
  struct ForwardPass {
    std::vector<double> c;
    double inv_len = 0.0;
    std::vector<PosState> states;
  };
  struct Gradients {
    std::map<std::string, std::vector<double>> tensors;
  };

  void init_position_table() {
    const int d = config_.embed_dim;
    pe_.assign(static_cast<std::size_t>(config_.max_len) * d, 0.0);
    for (int pos = 0; pos < config_.max_len; ++pos) {
      for (int k = 0; k < d; ++k) {
        double exponent = static_cast<double>(2 * (k / 2)) / d;
        double angle = pos / std::pow(10000.0, exponent);
        pe_[static_cast<std::size_t>(pos) * d + k] =
            (k % 2 == 0) ? std::sin(angle) : std::cos(angle);
      }
    }
  }

  // Box-Muller over mt19937_64 keeps initialization bit-stable across
  // standard libraries.
  static double normal01(std::mt19937_64& rng) {
    double u1 =
        (static_cast<double>(rng() >> 11) + 1.0) / 9007199254740993.0;
    double u2 = static_cast<double>(rng() >> 11) / 9007199254740992.0;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  void init_parameters() {
    const int v = vocab_, d = config_.embed_dim, h = config_.hidden_dim;
    std::mt19937_64 rng(config_.seed);
    auto fill = [&](std::vector<double>& t, std::size_t size) {
      t.resize(size);
      for (double& x : t) x = config_.init_scale * normal01(rng);
    };
    fill(emb_, static_cast<std::size_t>(v) * d);
    fill(w1_, static_cast<std::size_t>(h) * 2 * d);
    b1_.assign(static_cast<std::size_t>(h), 0.0);
    gamma_.assign(static_cast<std::size_t>(h), 1.0);
    beta_.assign(static_cast<std::size_t>(h), 0.0);
    fill(w2_, static_cast<std::size_t>(v) * h);
    b2_.assign(static_cast<std::size_t>(v), 0.0);
  }

  void check_input(const PromptedInput& input, bool check_masks) const {
    const std::size_t len = input.token_ids.size();
    if (len == 0) throw Error("forward: empty input");
    if (len > static_cast<std::size_t>(config_.max_len))
      throw Error("forward: input length " + std::to_string(len) +
                  " exceeds max_len " + std::to_string(config_.max_len));
    for (int id : input.token_ids)
      if (id < 0 || id >= vocab_)
        throw Error("forward: token id " + std::to_string(id) +
                    " outside vocabulary of size " + std::to_string(vocab_));
    if (!check_masks) return;
    for (std::size_t m : input.mask_positions) {
      if (m >= len)
        throw Error("forward: mask position " + std::to_string(m) +
                    " out of range");
      if (input.token_ids[m] != descriptor_.mask_token_id)
        throw Error("forward: token at mask position " + std::to_string(m) +
                    " is not the mask token");
    }
  }

  ForwardPass run_forward(const PromptedInput& input,
                          const std::vector<std::size_t>& positions,
                          bool check_masks = true) const {
    check_input(input, check_masks);
    const int d = config_.embed_dim, h = config_.hidden_dim;
    const std::size_t len = input.token_ids.size();

    ForwardPass pass;
    pass.inv_len = 1.0 / static_cast<double>(len);
    pass.c.assign(static_cast<std::size_t>(d), 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      const double* e = &emb_[static_cast<std::size_t>(input.token_ids[i]) * d];
      const double* p = &pe_[i * static_cast<std::size_t>(d)];
      for (int k = 0; k < d; ++k) pass.c[static_cast<std::size_t>(k)] += e[k] + p[k];
    }
    for (double& x : pass.c) x *= pass.inv_len;

    for (std::size_t m : positions) {
      if (m >= len)
        throw Error("forward: queried position " + std::to_string(m) +
                    " out of range");
      PosState s;
      s.position = m;
      s.u.resize(static_cast<std::size_t>(2 * d));
      const double* e = &emb_[static_cast<std::size_t>(input.token_ids[m]) * d];
      const double* p = &pe_[m * static_cast<std::size_t>(d)];
      for (int k = 0; k < d; ++k) {
        s.u[static_cast<std::size_t>(k)] = e[k] + p[k];
        s.u[static_cast<std::size_t>(d + k)] = pass.c[static_cast<std::size_t>(k)];
      }
      s.a.resize(static_cast<std::size_t>(h));
      for (int j = 0; j < h; ++j) {
        double z = b1_[static_cast<std::size_t>(j)];
        const double* row = &w1_[static_cast<std::size_t>(j) * 2 * d];
        for (int k = 0; k < 2 * d; ++k) z += row[k] * s.u[static_cast<std::size_t>(k)];
        s.a[static_cast<std::size_t>(j)] = std::tanh(z);
      }
      double mean = 0.0;
      for (double a : s.a) mean += a;
      mean /= h;
      double var = 0.0;
      for (double a : s.a) var += (a - mean) * (a - mean);
      var /= h;
      s.inv_sigma = 1.0 / std::sqrt(var + config_.ln_eps);
      s.ahat.resize(static_cast<std::size_t>(h));
      s.n.resize(static_cast<std::size_t>(h));
      for (int j = 0; j < h; ++j) {
        s.ahat[static_cast<std::size_t>(j)] = (s.a[static_cast<std::size_t>(j)] - mean) * s.inv_sigma;
        s.n[static_cast<std::size_t>(j)] = gamma_[static_cast<std::size_t>(j)] * s.ahat[static_cast<std::size_t>(j)] +
                                           beta_[static_cast<std::size_t>(j)];
      }
      s.logits.resize(static_cast<std::size_t>(vocab_));
      for (int v = 0; v < vocab_; ++v) {
        double acc = b2_[static_cast<std::size_t>(v)];
        const double* row = &w2_[static_cast<std::size_t>(v) * h];
        for (int j = 0; j < h; ++j) acc += row[j] * s.n[static_cast<std::size_t>(j)];
        s.logits[static_cast<std::size_t>(v)] = acc;
      }
      pass.states.push_back(std::move(s));
    }
    return pass;
  }

  Gradients make_zero_gradients() const {
    Gradients g;
    g.tensors["embedding"].assign(emb_.size(), 0.0);
    g.tensors["hidden.w1"].assign(w1_.size(), 0.0);
    g.tensors["hidden.b1"].assign(b1_.size(), 0.0);
    g.tensors["layernorm.gamma"].assign(gamma_.size(), 0.0);
    g.tensors["layernorm.beta"].assign(beta_.size(), 0.0);
    g.tensors["output.w2"].assign(w2_.size(), 0.0);
    g.tensors["output.b2"].assign(b2_.size(), 0.0);
    return g;
  }

  // Forward + reverse pass for one example; accumulates into `grads`.
  double backprop(const PromptedInput& input, const LossSpec& loss,
                  LogitGradients* logit_grads, Gradients* grads) const {
    ForwardPass pass = run_forward(input, input.mask_positions);
    MaskLogits logits;
    logits.positions = input.mask_positions;
    for (const PosState& s : pass.states) logits.logits.push_back(s.logits);
    double value = loss_value(logits, loss, logit_grads);
    if (logit_grads->empty()) return value;

    const int d = config_.embed_dim, h = config_.hidden_dim;
    const std::size_t len = input.token_ids.size();
    std::vector<double>& d_emb = grads->tensors["embedding"];
    std::vector<double>& d_w1 = grads->tensors["hidden.w1"];
    std::vector<double>& d_b1 = grads->tensors["hidden.b1"];
    std::vector<double>& d_gamma = grads->tensors["layernorm.gamma"];
    std::vector<double>& d_beta = grads->tensors["layernorm.beta"];
    std::vector<double>& d_w2 = grads->tensors["output.w2"];
    std::vector<double>& d_b2 = grads->tensors["output.b2"];

    std::vector<double> dc(static_cast<std::size_t>(d), 0.0);
    for (const PosState& s : pass.states) {
      auto it = logit_grads->find(s.position);
      if (it == logit_grads->end()) continue;
      const std::vector<double>& g = it->second;

      std::vector<double> dn(static_cast<std::size_t>(h), 0.0);
      for (int v = 0; v < vocab_; ++v) {
        double gv = g[static_cast<std::size_t>(v)];
        if (gv == 0.0) continue;
        d_b2[static_cast<std::size_t>(v)] += gv;
        double* w2_grad_row = &d_w2[static_cast<std::size_t>(v) * h];
        const double* w2_row = &w2_[static_cast<std::size_t>(v) * h];
        for (int j = 0; j < h; ++j) {
          w2_grad_row[j] += gv * s.n[static_cast<std::size_t>(j)];
          dn[static_cast<std::size_t>(j)] += gv * w2_row[j];
        }
      }

      double mean_ghat = 0.0, mean_ghat_ahat = 0.0;
      std::vector<double> ghat(static_cast<std::size_t>(h));
      for (int j = 0; j < h; ++j) {
        d_gamma[static_cast<std::size_t>(j)] += dn[static_cast<std::size_t>(j)] * s.ahat[static_cast<std::size_t>(j)];
        d_beta[static_cast<std::size_t>(j)] += dn[static_cast<std::size_t>(j)];
        ghat[static_cast<std::size_t>(j)] = dn[static_cast<std::size_t>(j)] * gamma_[static_cast<std::size_t>(j)];
        mean_ghat += ghat[static_cast<std::size_t>(j)];
        mean_ghat_ahat += ghat[static_cast<std::size_t>(j)] * s.ahat[static_cast<std::size_t>(j)];
      }
      mean_ghat /= h;
      mean_ghat_ahat /= h;

      std::vector<double> dz(static_cast<std::size_t>(h));
      for (int j = 0; j < h; ++j) {
        double da = s.inv_sigma * (ghat[static_cast<std::size_t>(j)] - mean_ghat -
                                   s.ahat[static_cast<std::size_t>(j)] * mean_ghat_ahat);
        double a = s.a[static_cast<std::size_t>(j)];
        dz[static_cast<std::size_t>(j)] = da * (1.0 - a * a);
      }

      std::vector<double> du(static_cast<std::size_t>(2 * d), 0.0);
      for (int j = 0; j < h; ++j) {
        double dzj = dz[static_cast<std::size_t>(j)];
        d_b1[static_cast<std::size_t>(j)] += dzj;
        double* w1_grad_row = &d_w1[static_cast<std::size_t>(j) * 2 * d];
        const double* w1_row = &w1_[static_cast<std::size_t>(j) * 2 * d];
        for (int k = 0; k < 2 * d; ++k) {
          w1_grad_row[k] += dzj * s.u[static_cast<std::size_t>(k)];
          du[static_cast<std::size_t>(k)] += dzj * w1_row[k];
        }
      }

      double* emb_grad =
          &d_emb[static_cast<std::size_t>(input.token_ids[s.position]) * d];
      for (int k = 0; k < d; ++k) {
        emb_grad[k] += du[static_cast<std::size_t>(k)];
        dc[static_cast<std::size_t>(k)] += du[static_cast<std::size_t>(d + k)];
      }
    }

    for (std::size_t i = 0; i < len; ++i) {
      double* emb_grad =
          &d_emb[static_cast<std::size_t>(input.token_ids[i]) * d];
      for (int k = 0; k < d; ++k)
        emb_grad[k] += dc[static_cast<std::size_t>(k)] * pass.inv_len;
    }
    return value;
  }

  bool group_decays(const std::string& tensor_name) const {
    auto dot = tensor_name.find('.');
    std::string group =
        dot == std::string::npos ? tensor_name : tensor_name.substr(0, dot);
    return config_.decay_groups.count(group) != 0;
  }

  void apply_update(Gradients& grads) {
    std::vector<AdamW::GroupRef> refs;
    auto params = named_parameters();
    for (auto& [name, tensor] : params) {
      refs.push_back({name, std::span<double>(*tensor),
                      std::span<const double>(grads.tensors.at(name)),
                      group_decays(name)});
    }
    optimizer_.step(refs);
  }

  ToyBackendConfig config_;
  int vocab_;
  BackendDescriptor descriptor_;
  std::vector<double> pe_;
  std::vector<double> emb_, w1_, b1_, gamma_, beta_, w2_, b2_;
  AdamW optimizer_{AdamWConfig{}};
};

}  // namespace adprompt
