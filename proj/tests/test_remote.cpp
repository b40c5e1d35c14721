#include "doctest.h"
#include "flowgen/remote_lm.hpp"
#include "httplib.h"
#include "support.hpp"

using namespace testing;

namespace {

std::string golden(const std::string& name) {
  std::string s = slurp(source_path("tests/golden/" + name));
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

std::shared_ptr<const Tokenizer> golden_vocab() {
  return load_vocabulary(source_path("tests/golden/vocab.txt"));
}

}  // namespace

TEST_CASE("request bytes match the golden file") {
  const std::vector<TokenId> ctx{2, 1};
  const TokenMask mask{2, 3, 7};
  CHECK(RemoteScorer::request_body(ctx, &mask, true) == golden("score_request.json"));
  CHECK(RemoteScorer::request_body(ctx, nullptr, false) ==
        R"({"context":[2,1],"mask":null,"renormalize":false})");
}

TEST_CASE("golden response parses with null as -inf") {
  const LogProbs lp = RemoteScorer::parse_response(golden("score_response.json"), 7);
  CHECK(std::isinf(lp.tokens[0]));
  CHECK(lp.tokens[2] == doctest::Approx(-std::log(3.0)));
  CHECK(lp.eos == doctest::Approx(-std::log(3.0)));
  CHECK_THROWS_AS(RemoteScorer::parse_response(golden("score_response.json"), 8), ProtocolError);
  CHECK_THROWS_AS(RemoteScorer::parse_response("{\"logprobs\": [", 7), ProtocolError);
  CHECK_THROWS_AS(RemoteScorer::parse_response(R"({"eos_logprob":"x","logprobs":[]})", 0),
                  ProtocolError);
}

TEST_CASE("mock server speaks the golden protocol") {
  MockLmServer server({golden_vocab(), "", 0.9, ""});
  server.start();
  httplib::Client raw(server.url());
  auto vocab = raw.Get("/vocab");
  REQUIRE(vocab);
  CHECK(vocab->body == golden("vocab_response.json"));
  auto res = raw.Post("/score", golden("score_request.json"), "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == golden("score_response.json"));

  const RemoteScorer scorer(server.url(), golden_vocab());
  const std::vector<TokenId> ctx{2, 1};
  const TokenMask mask{2, 3, 7};
  const LogProbs lp = scorer.next_logprobs(ctx, &mask, true);
  CHECK(server.requests().back() == golden("score_request.json"));
  const LogProbs local = server.score(ctx, &mask, true);
  CHECK(lp.tokens == local.tokens);
  CHECK(lp.eos == local.eos);

  auto bad = raw.Post("/score", "{\"context\": [99], \"mask\": null, \"renormalize\": true}",
                      "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  server.stop();
}

TEST_CASE("digest mismatch is rejected") {
  MockLmServer liar({golden_vocab(), "", 0.9, "0000"});
  liar.start();
  CHECK_THROWS_AS(RemoteScorer(liar.url(), golden_vocab()), DigestMismatch);
  liar.stop();

  MockLmServer other({std::make_shared<const WhitespaceTokenizer>(
                          std::vector<std::string>{"<unk>", "<SEP>", "yes"}),
                      "", 0.9, ""});
  other.start();
  CHECK_THROWS_AS(RemoteScorer(other.url(), golden_vocab()), DigestMismatch);
  other.stop();
}

TEST_CASE("unreachable server is a remote error") {
  int port = 0;
  {
    MockLmServer s({golden_vocab(), "", 0.9, ""});
    s.start();
    port = s.port();
    s.stop();
  }
  CHECK_THROWS_AS(RemoteScorer("http://127.0.0.1:" + std::to_string(port), golden_vocab(), 1.0),
                  RemoteError);
}

TEST_CASE("unconstrained decoding follows a scripted mock") {
  auto vocab = golden_vocab();
  MockLmServer server({vocab, "yes , tomorrow .", 0.9, ""});
  server.start();
  const RemoteScorer scorer(server.url(), vocab);
  DecodeConfig cfg;
  cfg.beam = 3;
  cfg.max_len = 8;
  const auto ctx = encode_context(*vocab, "anything\n<SEP>\n");
  const DecodeResult r = unconstrained_decode(*vocab, scorer, ctx, cfg);
  REQUIRE_FALSE(r.candidates.empty());
  CHECK(r.candidates.front().text == "yes , tomorrow .");
  server.stop();
}
