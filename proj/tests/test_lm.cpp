#include <filesystem>

#include "doctest.h"
#include "flowgen/prompt.hpp"
#include "support.hpp"

using namespace testing;

namespace {

double total_mass(const LogProbs& lp) {
  double s = std::exp(lp.eos);
  for (double v : lp.tokens) s += std::exp(v);
  return s;
}

NgramModel toy_model(std::size_t order) {
  return NgramModel::train({{{"q"}, {"a", "b"}}, {{"q"}, {"a", "c"}}}, order, 0.1);
}

}  // namespace

TEST_CASE("tokenizer basics") {
  const auto tok = WhitespaceTokenizer::with_specials({"b", "a", "a"});
  CHECK(tok.vocabulary() == std::vector<std::string>{"<unk>", "<SEP>", "a", "b"});
  CHECK(tok.is_special(0));
  CHECK(tok.is_special(1));
  CHECK_FALSE(tok.is_special(2));
  CHECK(tok.digest() == "fc75e0d18790ecb6f28781160f239c85c049a33170f0229cb6a198b25bc3e13e");
  CHECK(WhitespaceTokenizer({"a", "b"}).digest() ==
        "197e08f9859a0068788319eb0cb661666c3c71b26e5477bc173d4a17734439f1");
  CHECK_THROWS_AS(tok.encode("zzz"), UnknownToken);
  CHECK(encode_context(tok, "a zzz b") == std::vector<TokenId>{2, 0, 3});
  CHECK(tok.decode(std::vector<TokenId>{2, 3}) == "a b");
}

TEST_CASE("pretokenize") {
  CHECK(pretokenize("(nonEmpty (findEventsOnDate (tomorrow)))\n<SEP>\ntrue") ==
        std::vector<std::string>{"(", "nonEmpty", "(", "findEventsOnDate", "(", "tomorrow", ")",
                                 ")", ")", "<SEP>", "true"});
  CHECK(pretokenize("{\"a\":\"10:30\"}") ==
        std::vector<std::string>{"{", "\"", "a", "\"", ":", "\"", "10:30", "\"", "}"});
}

TEST_CASE("subword tokenizer is greedy longest match") {
  const SubwordTokenizer tok({"<unk>", "to", "tom", "##orrow", "##morrow", "##day"});
  CHECK(tok.encode("tomorrow") == std::vector<TokenId>{2, 3});
  CHECK(tok.encode("today") == std::vector<TokenId>{1, 5});
  CHECK(tok.decode(std::vector<TokenId>{2, 3, 1, 5}) == "tomorrow today");
  CHECK_THROWS_AS(tok.encode("xyz"), UnknownToken);
}

TEST_CASE("masking and renormalization") {
  const UniformScorer u(4);
  const std::vector<TokenId> ctx{1, 2};
  const LogProbs full = u.next_logprobs(ctx);
  CHECK(full.eos == doctest::Approx(-std::log(5.0)));
  CHECK(total_mass(full) == doctest::Approx(1.0));
  const TokenMask mask{1, 4};
  const LogProbs m = u.next_logprobs(ctx, &mask, true);
  CHECK(m.tokens[1] == doctest::Approx(std::log(0.5)));
  CHECK(m.eos == doctest::Approx(std::log(0.5)));
  CHECK(std::isinf(m.tokens[0]));
  const LogProbs raw = u.next_logprobs(ctx, &mask, false);
  CHECK(raw.tokens[1] == doctest::Approx(-std::log(5.0)));
  const TokenMask bad{9};
  CHECK_THROWS_AS(u.next_logprobs(ctx, &bad), OutOfVocabulary);
  const std::vector<TokenId> oov{7};
  CHECK_THROWS_AS(u.next_logprobs(oov), OutOfVocabulary);
}

TEST_CASE("n-gram counts match a hand count") {
  const NgramModel m = toy_model(2);
  CHECK(m.count({}, "a") == 2);
  CHECK(m.count({}, "</s>") == 2);
  CHECK(m.count({"q"}, "a") == 2);
  CHECK(m.count({"a"}, "b") == 1);
  CHECK(m.count({"a"}, "c") == 1);
  CHECK(m.count({"b"}, "</s>") == 1);
  CHECK(m.count({"q"}, "b") == 0);
  CHECK(m.count({}, "q") == 0);  // context words are history only
  CHECK(m.vocabulary() == std::vector<std::string>{"a", "b", "c", "q"});
}

TEST_CASE("n-gram probabilities follow the interpolated add-k formula") {
  auto model = std::make_shared<const NgramModel>(toy_model(2));
  auto tok = std::make_shared<const WhitespaceTokenizer>(
      WhitespaceTokenizer::with_specials(model->vocabulary()));
  const NgramScorer s(model, tok);
  const TokenId a = *tok->lookup("a"), b = *tok->lookup("b"), q = *tok->lookup("q");
  // V = 6 tokens + EOS, kV = 0.7, unigram total 6.
  const double p1_b = (1 + 0.1) / 6.7;
  const double p1_q = 0.1 / 6.7;
  const std::vector<TokenId> after_a{q, a};
  const LogProbs lp = s.next_logprobs(after_a);
  CHECK(lp.tokens[static_cast<std::size_t>(b)] == doctest::Approx(std::log((1 + 0.7 * p1_b) / 2.7)));
  CHECK(lp.tokens[static_cast<std::size_t>(q)] == doctest::Approx(std::log(0.7 * p1_q / 2.7)));
  CHECK(total_mass(lp) == doctest::Approx(1.0));
  // Only EOS ever followed "b".
  const std::vector<TokenId> after_b{b};
  CHECK(s.next_logprobs(after_b).eos == doctest::Approx(std::log((1 + 0.7 * (2.1 / 6.7)) / 1.7)));
  // An unseen history backs off to the unigram estimate unchanged.
  const std::vector<TokenId> after_sep{1};
  CHECK(s.next_logprobs(after_sep).tokens[static_cast<std::size_t>(a)] ==
        doctest::Approx(std::log(2.1 / 6.7)));
  // Empty context reads as <s>, never seen as a history.
  CHECK(s.next_logprobs({}).tokens[static_cast<std::size_t>(a)] ==
        doctest::Approx(std::log(2.1 / 6.7)));
}

TEST_CASE("order-1 model on a degenerate corpus") {
  const NgramModel m = NgramModel::train({{{}, {"x"}}}, 1, 0.5);
  CHECK(m.count({}, "x") == 1);
  CHECK(m.count({}, "</s>") == 1);
  CHECK_THROWS(NgramModel::train({}, 2));
  CHECK_THROWS(NgramModel::train({{{}, {"x"}}}, 0));
}

TEST_CASE("save/load round trip gives identical distributions") {
  const Pipeline p = calendar_pipeline();
  const NgramModel m = NgramModel::train(p.lm_corpus(synthetic("train", p)), 4);
  const auto path = std::filesystem::temp_directory_path() / "flowgen_roundtrip.json";
  m.save(path.string());
  const NgramModel back = NgramModel::load(path.string());
  std::filesystem::remove(path);
  CHECK(back == m);
  CHECK(back.to_json() == m.to_json());

  auto tok = std::make_shared<const WhitespaceTokenizer>(
      WhitespaceTokenizer::with_specials(m.vocabulary()));
  const NgramScorer a(std::make_shared<const NgramModel>(m), tok);
  const NgramScorer b(std::make_shared<const NgramModel>(back), tok);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    std::vector<TokenId> ctx(std::uniform_int_distribution<std::size_t>(0, 8)(rng));
    for (auto& t : ctx)
      t = std::uniform_int_distribution<TokenId>(0, static_cast<TokenId>(tok->size()) - 1)(rng);
    const LogProbs x = a.next_logprobs(ctx), y = b.next_logprobs(ctx);
    CHECK(x.tokens == y.tokens);
    CHECK(x.eos == y.eos);
    CHECK(total_mass(x) == doctest::Approx(1.0));
  }
  CHECK_THROWS(NgramModel::from_json("{\"format\": \"other\"}"));
}

TEST_CASE("prompt parts") {
  const Pipeline p = calendar_pipeline();
  ExecContext ctx = p.fresh_context();
  const DataflowGraph raw = fixture_graph(p, "meetings_tomorrow");
  const DataflowGraph g = execute(raw, *p.registry, ctx);
  CHECK(build_prompt(g, PromptFlags{}, "ignored") ==
        "(nonEmpty (findEventsOnDate (tomorrow)))\n<SEP>\ntrue\n<SEP>\n");
  CHECK(build_prompt(g, PromptFlags::parse("utterance,result"), "Any  meetings?") ==
        "Any meetings?\n<SEP>\ntrue\n<SEP>\n");
  CHECK(build_prompt(g, PromptFlags::parse("none")).empty());
  CHECK_THROWS(build_prompt(raw, PromptFlags{}));
  CHECK_THROWS(PromptFlags::parse("computation,bogus"));
  CHECK(PromptFlags::parse("result,computation").str() == "computation,result");
}
