#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "flowgen/lm.hpp"

namespace httplib {
class Client;
class Server;
}  // namespace httplib

namespace flowgen {

/// Client for an external scoring service.
///
///   POST /score  {"context": [int], "mask": [int] | null, "renormalize": bool}
///             -> {"eos_logprob": float, "logprobs": [float]}
///   GET  /vocab -> {"digest": hex, "size": int}
///
/// Keys are sent sorted and compact. -inf travels as null. The constructor
/// performs the /vocab handshake and throws DigestMismatch when the server's
/// vocabulary differs from `tokenizer`'s.
class RemoteScorer : public LmScorer {
 public:
  RemoteScorer(std::string url, std::shared_ptr<const Tokenizer> tokenizer,
               double timeout_seconds = 10.0);
  ~RemoteScorer() override;

  std::size_t vocab_size() const override { return tokenizer_->size(); }
  LogProbs next_logprobs(std::span<const TokenId> context, const TokenMask* mask = nullptr,
                         bool renormalize = true) const override;

  static std::string request_body(std::span<const TokenId> context, const TokenMask* mask,
                                  bool renormalize);
  static LogProbs parse_response(const std::string& body, std::size_t vocab_size);

 private:
  std::string url_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  std::unique_ptr<httplib::Client> client_;
  mutable std::mutex mu_;
};

class RemoteProvider : public LmProvider {
 public:
  RemoteProvider(std::string url, std::shared_ptr<const Tokenizer> tokenizer);
  /// The remote vocabulary is fixed; `words` are ignored.
  LmSession session(const std::vector<std::string>& words) const override;

 private:
  LmSession session_;
};

/// In-process scoring service used by tests and the mock_lm_server tool.
/// Without a script it is uniform. With a script (a sentence), tokens after
/// the last <SEP> in the context that follow the script get `favored`
/// probability on the next script token (or EOS once it is complete).
class MockLmServer {
 public:
  struct Options {
    std::shared_ptr<const Tokenizer> tokenizer;
    std::string script;
    double favored = 0.9;
    std::string digest;  // overrides the advertised digest when non-empty
  };

  explicit MockLmServer(Options options);
  ~MockLmServer();

  /// Binds and serves on a background thread. Port 0 picks a free port.
  void start(const std::string& host = "127.0.0.1", int port = 0);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  std::string url() const;

  /// Raw /score request bodies in arrival order.
  std::vector<std::string> requests() const;

  LogProbs score(std::span<const TokenId> context, const TokenMask* mask, bool renormalize) const;

 private:
  void install_handlers();

  Options options_;
  std::vector<TokenId> script_ids_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = 0;
  mutable std::mutex mu_;
  std::vector<std::string> requests_;
};

}  // namespace flowgen
