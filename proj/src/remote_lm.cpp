#include "flowgen/remote_lm.hpp"

#include <cmath>
#include <limits>

#include "flowgen/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace flowgen {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double from_wire(const nlohmann::json& v) {
  if (v.is_null()) return kNegInf;
  if (!v.is_number()) throw ProtocolError("logprob is not a number");
  return v.get<double>();
}

}  // namespace

RemoteScorer::RemoteScorer(std::string url, std::shared_ptr<const Tokenizer> tokenizer,
                           double timeout_seconds)
    : url_(std::move(url)), tokenizer_(std::move(tokenizer)) {
  if (!tokenizer_) throw Error("remote scorer needs a tokenizer");
  client_ = std::make_unique<httplib::Client>(url_);
  if (!client_->is_valid()) throw RemoteError("invalid remote LM url " + url_);
  const auto secs = static_cast<time_t>(timeout_seconds);
  const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
  client_->set_connection_timeout(secs, usecs);
  client_->set_read_timeout(secs, usecs);
  client_->set_write_timeout(secs, usecs);

  auto res = client_->Get("/vocab");
  if (!res) throw RemoteError("GET " + url_ + "/vocab failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ProtocolError("GET /vocab returned HTTP " + std::to_string(res->status));
  std::string digest;
  std::size_t size = 0;
  try {
    auto j = nlohmann::json::parse(res->body);
    digest = j.at("digest").get<std::string>();
    size = j.at("size").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed /vocab response: ") + e.what());
  }
  if (digest != tokenizer_->digest() || size != tokenizer_->size())
    throw DigestMismatch("remote vocabulary (" + std::to_string(size) + " tokens, " + digest +
                         ") differs from local (" + std::to_string(tokenizer_->size()) +
                         " tokens, " + tokenizer_->digest() + ")");
}

RemoteScorer::~RemoteScorer() = default;

std::string RemoteScorer::request_body(std::span<const TokenId> context, const TokenMask* mask,
                                       bool renormalize) {
  nlohmann::json j;
  j["context"] = std::vector<TokenId>(context.begin(), context.end());
  j["mask"] = mask ? nlohmann::json(*mask) : nlohmann::json(nullptr);
  j["renormalize"] = renormalize;
  return j.dump();
}

LogProbs RemoteScorer::parse_response(const std::string& body, std::size_t vocab_size) {
  LogProbs out;
  try {
    auto j = nlohmann::json::parse(body);
    const auto& lp = j.at("logprobs");
    if (!lp.is_array() || lp.size() != vocab_size)
      throw ProtocolError("expected " + std::to_string(vocab_size) + " logprobs, got " +
                          std::to_string(lp.is_array() ? lp.size() : 0));
    out.tokens.reserve(vocab_size);
    for (const auto& v : lp) out.tokens.push_back(from_wire(v));
    out.eos = from_wire(j.at("eos_logprob"));
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed /score response: ") + e.what());
  }
  return out;
}

LogProbs RemoteScorer::next_logprobs(std::span<const TokenId> context, const TokenMask* mask,
                                     bool renormalize) const {
  for (TokenId id : context)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size())
      throw OutOfVocabulary("context token " + std::to_string(id) + " outside vocabulary");
  const std::string body = request_body(context, mask, renormalize);
  std::lock_guard lock(mu_);
  auto res = client_->Post("/score", body, "application/json");
  if (!res) throw RemoteError("POST " + url_ + "/score failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw ProtocolError("POST /score returned HTTP " + std::to_string(res->status));
  return parse_response(res->body, vocab_size());
}

RemoteProvider::RemoteProvider(std::string url, std::shared_ptr<const Tokenizer> tokenizer) {
  auto scorer = std::make_shared<const RemoteScorer>(std::move(url), tokenizer);
  session_ = LmSession{std::move(tokenizer), std::move(scorer)};
}

LmSession RemoteProvider::session(const std::vector<std::string>&) const { return session_; }

std::unique_ptr<LmProvider> make_provider(const std::string& spec, const std::string& vocab_path) {
  if (spec == "uniform") return std::make_unique<UniformProvider>();
  if (spec.rfind("ngram:", 0) == 0) {
    auto model = std::make_shared<const NgramModel>(NgramModel::load(spec.substr(6)));
    return std::make_unique<NgramProvider>(std::move(model));
  }
  if (spec.rfind("remote:", 0) == 0) {
    if (vocab_path.empty()) throw Error("a remote LM needs a vocabulary file (--vocab)");
    return std::make_unique<RemoteProvider>(spec.substr(7), load_vocabulary(vocab_path));
  }
  throw Error("unknown LM spec '" + spec + "', expected uniform, ngram:PATH or remote:URL");
}

MockLmServer::MockLmServer(Options options) : options_(std::move(options)) {
  if (!options_.tokenizer) throw Error("mock server needs a tokenizer");
  for (const auto& piece : pretokenize(options_.script)) {
    auto ids = options_.tokenizer->encode(piece);
    script_ids_.insert(script_ids_.end(), ids.begin(), ids.end());
  }
  server_ = std::make_unique<httplib::Server>();
  install_handlers();
}

MockLmServer::~MockLmServer() { stop(); }

LogProbs MockLmServer::score(std::span<const TokenId> context, const TokenMask* mask,
                             bool renormalize) const {
  const std::size_t v = options_.tokenizer->size();
  LogProbs full{std::vector<double>(v, -std::log(static_cast<double>(v + 1))),
                -std::log(static_cast<double>(v + 1))};
  if (!script_ids_.empty()) {
    std::size_t start = 0;
    if (auto sep = options_.tokenizer->lookup(kSepToken)) {
      for (std::size_t i = context.size(); i-- > 0;)
        if (context[i] == *sep) {
          start = i + 1;
          break;
        }
    }
    const std::size_t n = context.size() - start;
    bool on_script = n <= script_ids_.size() &&
                     std::equal(context.begin() + static_cast<std::ptrdiff_t>(start),
                                context.end(), script_ids_.begin());
    if (on_script) {
      const double rest = std::log((1.0 - options_.favored) / static_cast<double>(v));
      for (double& x : full.tokens) x = rest;
      full.eos = rest;
      if (n == script_ids_.size())
        full.eos = std::log(options_.favored);
      else
        full.tokens[static_cast<std::size_t>(script_ids_[n])] = std::log(options_.favored);
    }
  }
  if (!mask) return full;
  return apply_mask(std::move(full), *mask, renormalize);
}

void MockLmServer::install_handlers() {
  server_->Get("/vocab", [this](const httplib::Request&, httplib::Response& res) {
    nlohmann::json j;
    j["digest"] = options_.digest.empty() ? options_.tokenizer->digest() : options_.digest;
    j["size"] = options_.tokenizer->size();
    res.set_content(j.dump(), "application/json");
  });
  server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(mu_);
      requests_.push_back(req.body);
    }
    try {
      auto j = nlohmann::json::parse(req.body);
      auto context = j.at("context").get<std::vector<TokenId>>();
      std::optional<TokenMask> mask;
      if (!j.at("mask").is_null()) mask = j.at("mask").get<TokenMask>();
      const bool renorm = j.at("renormalize").get<bool>();
      for (TokenId id : context)
        if (id < 0 || static_cast<std::size_t>(id) >= options_.tokenizer->size())
          throw Error("context token out of range");
      LogProbs lp = score(context, mask ? &*mask : nullptr, renorm);
      nlohmann::json out;
      out["eos_logprob"] = lp.eos;
      out["logprobs"] = lp.tokens;
      res.set_content(out.dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

void MockLmServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0)
    port_ = server_->bind_to_any_port(host);
  else if (server_->bind_to_port(host, port))
    port_ = port;
  else
    port_ = -1;
  if (port_ < 0) throw RemoteError("mock server cannot bind " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void MockLmServer::run(const std::string& host, int port) {
  host_ = host;
  if (!server_->bind_to_port(host, port)) throw RemoteError("mock server cannot bind " + host);
  port_ = port;
  server_->listen_after_bind();
}

void MockLmServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockLmServer::url() const { return "http://" + host_ + ":" + std::to_string(port_); }

std::vector<std::string> MockLmServer::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

}  // namespace flowgen
