#include <filesystem>

#include "doctest.h"
#include "flowgen/eval.hpp"
#include "support.hpp"

using namespace testing;

namespace {

double bleu1(const std::string& c, const std::string& r) { return bleu4({c}, {r}); }

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("normalize") {
  CHECK(normalize("Yes ,  I Found") == "yes , i found");
  CHECK(normalize("") == "");
  CHECK(normalize("A\t B\n") == "a b");
  CHECK(metric_tokens("  x  Y ") == std::vector<std::string>{"x", "y"});
}

// Hand-computed: modified precisions p1..p4 (orders with no candidate
// n-grams dropped, zero matches -> 0.1 / count), brevity penalty.
TEST_CASE("BLEU-4 on hand-computed pairs") {
  // p1=p2=p3=1, no 4-grams; c=3 < r=4.
  CHECK(std::abs(bleu1("the cat sat", "the cat sat down") - std::exp(1.0 - 4.0 / 3.0)) < 1e-9);
  // p1=3/4, p2=1/3, p3=0.1/2, p4=0.1/1; c=r.
  CHECK(std::abs(bleu1("a b c d", "a c d e") - std::pow(0.75 / 3 * 0.05 * 0.1, 0.25)) < 1e-9);
  // Clipping: p1=1/4, p2=0.1/3, p3=0.1/2, p4=0.1/1; c=4 > r=2.
  CHECK(std::abs(bleu1("the the the the", "the cat") -
                 std::pow(0.25 * (0.1 / 3) * 0.05 * 0.1, 0.25)) < 1e-9);
  // p1=3/6, p2=2/5, p3=1/4, p4=0.1/3; c=6 > r=4.
  CHECK(std::abs(bleu1("on march 15 at 10 am", "tomorrow at 10 am") -
                 std::pow(0.5 * 0.4 * 0.25 * (0.1 / 3), 0.25)) < 1e-9);
  CHECK(bleu1("yes , i found one event tomorrow .", "yes , i found one event tomorrow .") == 1.0);
  CHECK(bleu1("Yes ,  I Found", "yes , i found") == 1.0);
  CHECK(bleu1("x", "x") == 1.0);
  CHECK(bleu1("a b", "c d") == 0.0);
  CHECK(bleu1("", "c d") == 0.0);
  CHECK_THROWS_AS(bleu4({"a"}, {}), AlignmentError);
  CHECK_THROWS(bleu4({}, {}));
}

TEST_CASE("BLEU-4 pools counts over the corpus") {
  // Unigrams 4/5, bigrams 2/3, trigrams 1/1, 4-grams none; c=5 < r=6.
  const double want = std::exp(1.0 - 6.0 / 5.0) * std::pow(0.8 * (2.0 / 3.0) * 1.0, 1.0 / 3.0);
  CHECK(std::abs(bleu4({"a b c", "x y"}, {"a b c", "x z w"}) - want) < 1e-9);
}

TEST_CASE("ROUGE-L on hand-computed pairs") {
  CHECK(std::abs(rouge_l("a b c d", "a c d e") - 0.75) < 1e-9);
  CHECK(std::abs(rouge_l("the the the the", "the cat") - 1.0 / 3.0) < 1e-9);
  CHECK(std::abs(rouge_l("on march 15 at 10 am", "tomorrow at 10 am") - 0.6) < 1e-9);
  CHECK(std::abs(rouge_l("the cat sat", "the cat sat down") - 6.0 / 7.0) < 1e-9);
  CHECK(rouge_l("Same  Text", "same text") == 1.0);
  CHECK(rouge_l("a b", "c d") == 0.0);
  CHECK(rouge_l("", "") == 1.0);
  CHECK(rouge_l("", "a") == 0.0);
}

TEST_CASE("recall at k") {
  const std::vector<RankedExample> ex{
      {"1", "Yes .", {"yes .", "no ."}},
      {"2", "no .", {"yes .", "No  ."}},
      {"3", "maybe", {"yes .", "no ."}},
  };
  CHECK(recall_at_k(ex, 1) == doctest::Approx(1.0 / 3));
  CHECK(recall_at_k(ex, 2) == doctest::Approx(2.0 / 3));
  CHECK(recall_at_k(ex, 5) == doctest::Approx(2.0 / 3));
  CHECK_THROWS(recall_at_k(ex, 0));
  const auto report = evaluate(ex);
  CHECK(report["r@1"].get<double>() <= report["r@5"].get<double>());
  CHECK(report["bertscore"].is_null());
  CHECK(report["per_example"].size() == 3);
  CHECK(report["bleu_smoothing"]["epsilon"] == 0.1);
}

TEST_CASE("datasets and predictions align by id") {
  const auto dir = std::filesystem::temp_directory_path() / "flowgen_eval_test";
  std::filesystem::create_directories(dir);
  write(dir / "g.sexp", "(nonEmpty (findEventsOnDate (tomorrow)))\n");
  write(dir / "data.jsonl",
        R"({"id":"a","graph":"g.sexp","utterance":"u","gold":"yes ."})"
        "\n"
        R"j({"id":"b","graph":"(size (findEventsOnDate (today)))","gold":"two"})j"
        "\n");
  const Pipeline p = calendar_pipeline();
  const auto ds = load_dataset((dir / "data.jsonl").string(), *p.registry);
  REQUIRE(ds.size() == 2);
  CHECK(ds[0].graph.node(ds[0].graph.root()).op == "nonEmpty");
  CHECK(ds[1].utterance.empty());

  write(dir / "pred.jsonl",
        R"({"id":"b","candidates":[{"text":"two","score":-1.0}],"grammar_size":3})"
        "\n"
        R"({"id":"a","candidates":[{"text":"no .","score":-1.0},{"text":"Yes .","score":-2.0}]})"
        "\n");
  const auto ranked = align(ds, load_predictions((dir / "pred.jsonl").string()));
  CHECK(recall_at_k(ranked, 1) == doctest::Approx(0.5));
  CHECK(recall_at_k(ranked, 5) == doctest::Approx(1.0));

  write(dir / "short.jsonl", R"({"id":"a","candidates":[]})" "\n");
  CHECK_THROWS_AS(align(ds, load_predictions((dir / "short.jsonl").string())), AlignmentError);
  write(dir / "extra.jsonl",
        R"({"id":"a","candidates":[]})" "\n" R"({"id":"b","candidates":[]})" "\n"
        R"({"id":"c","candidates":[]})" "\n");
  CHECK_THROWS_AS(align(ds, load_predictions((dir / "extra.jsonl").string())), AlignmentError);
  write(dir / "bad.jsonl", "{not json\n");
  CHECK_THROWS_AS(load_predictions((dir / "bad.jsonl").string()), AlignmentError);
  std::filesystem::remove_all(dir);
}
