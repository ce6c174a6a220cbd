#pragma once

// Adapter to an external model runtime over HTTP. The runtime owns the
// real model and tokenizer; this side assembles prompts, chooses what
// to mask, and sends declarative loss specs. Endpoints (JSON bodies):
//   GET  /descriptor           -> name, vocab_size, max_len,
//                                 mask_token_id, supports_training
//   GET  /tokenizer            -> vocab_size, begin_id, end_id, mask_id,
//                                 unk_id
//   POST /encode {text}        -> {ids}
//   POST /encode_word {word}   -> {ids}   (empty when unrepresentable)
//   POST /decode {id}          -> {text}
//   POST /forward {token_ids, mask_positions} -> {logits: [[...], ...]}
//   POST /embed {token_ids}    -> {embedding}
//   POST /train_step {examples: [{token_ids, mask_positions, loss}]}
//                              -> {loss}
//   POST /reset {seed}         -> {}     (fresh weights for a new run)

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "adprompt/backend.hpp"
#include "adprompt/tokenizer.hpp"
#include "adprompt/types.hpp"

namespace adprompt {
namespace detail {

inline nlohmann::json http_json(httplib::Client& client,
                                const std::string& method,
                                const std::string& path,
                                const nlohmann::json* body) {
  httplib::Result res =
      body ? client.Post(path, body->dump(), "application/json")
           : client.Get(path);
  if (!res)
    throw Error("backend http: cannot reach " + method + " " + path + " (" +
                httplib::to_string(res.error()) + ")");
  if (res->status != 200)
    throw Error("backend http: " + method + " " + path + " returned " +
                std::to_string(res->status) +
                (res->body.empty() ? "" : ": " + res->body));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error("backend http: " + method + " " + path +
                " returned invalid JSON: " + e.what());
  }
}

inline nlohmann::json http_get(httplib::Client& client,
                               const std::string& path) {
  return http_json(client, "GET", path, nullptr);
}

inline nlohmann::json http_post(httplib::Client& client,
                                const std::string& path,
                                const nlohmann::json& body) {
  return http_json(client, "POST", path, &body);
}

inline nlohmann::json loss_to_json(const LossSpec& loss) {
  nlohmann::json j;
  if (const auto* prompt = std::get_if<PromptLossSpec>(&loss)) {
    j["kind"] = "prompt";
    j["tasks"] = nlohmann::json::array();
    for (const PromptTaskTarget& t : prompt->tasks)
      j["tasks"].push_back({{"position", t.position},
                            {"true_class", t.true_class},
                            {"label_ids", t.label_ids},
                            {"weight", t.weight}});
  } else {
    const auto& mlm = std::get<MlmLossSpec>(loss);
    j["kind"] = "mlm";
    j["targets"] = nlohmann::json::array();
    for (const MlmTarget& t : mlm.targets)
      j["targets"].push_back(
          {{"position", t.position}, {"target_id", t.target_id}});
  }
  return j;
}

inline LossSpec loss_from_json(const nlohmann::json& j) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "prompt") {
    PromptLossSpec spec;
    for (const auto& t : j.at("tasks")) {
      PromptTaskTarget target;
      target.position = t.at("position").get<std::size_t>();
      target.true_class = t.at("true_class").get<int>();
      target.label_ids = t.at("label_ids").get<std::array<int, 2>>();
      target.weight = t.at("weight").get<double>();
      spec.tasks.push_back(target);
    }
    return spec;
  }
  if (kind == "mlm") {
    MlmLossSpec spec;
    for (const auto& t : j.at("targets"))
      spec.targets.push_back({t.at("position").get<std::size_t>(),
                              t.at("target_id").get<int>()});
    return spec;
  }
  throw Error("loss spec: unknown kind '" + kind + "'");
}

}  // namespace detail

class HttpTokenizer final : public Tokenizer {
 public:
  explicit HttpTokenizer(const std::string& base_url)
      : client_(std::make_unique<httplib::Client>(base_url)) {
    client_->set_read_timeout(300, 0);
    nlohmann::json j = detail::http_get(*client_, "/tokenizer");
    try {
      vocab_size_ = j.at("vocab_size").get<int>();
      begin_id_ = j.at("begin_id").get<int>();
      end_id_ = j.at("end_id").get<int>();
      mask_id_ = j.at("mask_id").get<int>();
      unk_id_ = j.at("unk_id").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("backend http: malformed /tokenizer reply: ") +
                  e.what());
    }
  }

  std::vector<int> encode(std::string_view text) const override {
    nlohmann::json reply = detail::http_post(
        *client_, "/encode", {{"text", std::string(text)}});
    return reply.at("ids").get<std::vector<int>>();
  }

  std::vector<int> encode_word(std::string_view word) const override {
    std::string key(word);
    if (auto it = word_cache_.find(key); it != word_cache_.end())
      return it->second;
    nlohmann::json reply =
        detail::http_post(*client_, "/encode_word", {{"word", key}});
    auto ids = reply.at("ids").get<std::vector<int>>();
    word_cache_[key] = ids;
    return ids;
  }

  std::string decode(int id) const override {
    nlohmann::json reply =
        detail::http_post(*client_, "/decode", {{"id", id}});
    return reply.at("text").get<std::string>();
  }

  int vocab_size() const override { return vocab_size_; }
  int begin_id() const override { return begin_id_; }
  int end_id() const override { return end_id_; }
  int mask_id() const override { return mask_id_; }
  int unk_id() const override { return unk_id_; }

 private:
  // Owned indirectly so const encode/decode can use the client, whose
  // request methods are non-const.
  std::unique_ptr<httplib::Client> client_;
  mutable std::map<std::string, std::vector<int>> word_cache_;
  int vocab_size_ = 0;
  int begin_id_ = 0;
  int end_id_ = 0;
  int mask_id_ = 0;
  int unk_id_ = 0;
};

class HttpBackend final : public Backend {
 public:
  using Backend::train_step;

  explicit HttpBackend(const std::string& base_url)
      : client_(std::make_unique<httplib::Client>(base_url)) {
    client_->set_read_timeout(600, 0);
    client_->set_write_timeout(600, 0);
    nlohmann::json j = detail::http_get(*client_, "/descriptor");
    try {
      descriptor_.name = j.at("name").get<std::string>();
      descriptor_.vocab_size = j.at("vocab_size").get<int>();
      descriptor_.max_len = j.at("max_len").get<int>();
      descriptor_.mask_token_id = j.at("mask_token_id").get<int>();
      descriptor_.supports_training = j.at("supports_training").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("backend http: malformed /descriptor reply: ") +
                  e.what());
    }
    descriptor_.validate();
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }

  MaskLogits forward(const PromptedInput& input) override {
    nlohmann::json reply = detail::http_post(
        *client_, "/forward",
        {{"token_ids", input.token_ids},
         {"mask_positions", input.mask_positions}});
    MaskLogits out;
    out.positions = input.mask_positions;
    out.logits =
        reply.at("logits").get<std::vector<std::vector<double>>>();
    if (out.logits.size() != out.positions.size())
      throw Error("backend http: /forward returned " +
                  std::to_string(out.logits.size()) + " logit rows for " +
                  std::to_string(out.positions.size()) + " mask positions");
    return out;
  }

  EmbeddingVector embed(const PromptedInput& input) override {
    nlohmann::json reply = detail::http_post(
        *client_, "/embed", {{"token_ids", input.token_ids}});
    return {reply.at("embedding").get<std::vector<double>>()};
  }

  double train_step(std::span<const TrainExample> batch) override {
    nlohmann::json examples = nlohmann::json::array();
    for (const TrainExample& ex : batch)
      examples.push_back({{"token_ids", ex.input->token_ids},
                          {"mask_positions", ex.input->mask_positions},
                          {"loss", detail::loss_to_json(*ex.loss)}});
    nlohmann::json reply = detail::http_post(*client_, "/train_step",
                                             {{"examples", examples}});
    return reply.at("loss").get<double>();
  }

  std::unique_ptr<Backend> snapshot() const override {
    throw Error("backend '" + descriptor_.name +
                "' does not support snapshots");
  }

  // Re-initializes the remote model for a fresh run.
  void reset(std::uint64_t seed) {
    detail::http_post(*client_, "/reset", {{"seed", seed}});
  }

 private:
  std::unique_ptr<httplib::Client> client_;
  BackendDescriptor descriptor_;
};

}  // namespace adprompt
