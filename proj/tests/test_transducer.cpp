#include "doctest.h"
#include "support.hpp"

using namespace testing;

namespace {

std::set<std::string> yields_of(const Qcfg& g, const QcfgNonterminal& n) {
  std::vector<QcfgProduction> prods = g.productions();
  Qcfg sub(n, prods);
  const auto all = enumerate(sub, 1000);
  return {all.begin(), all.end()};
}

}  // namespace

TEST_CASE("tomorrow question expands with size and first") {
  const Pipeline p = calendar_pipeline();
  const Fixture f = transduce_fixture(p, fixture_graph(p, "meetings_tomorrow"));
  const DataflowGraph& g = f.result.graph;
  REQUIRE(g.contains(NodeId("v3")));
  REQUIRE(g.contains(NodeId("v4")));
  CHECK(g.node(NodeId("v3")).op == "size");
  CHECK(g.node(NodeId("v4")).op == "first");
  CHECK(g.node(NodeId("v4")).arg_ids() == std::vector<NodeId>{NodeId("v1")});

  const auto dates = yields_of(f.result.grammar, nt("PP", 2));
  CHECK(dates.count("tomorrow") == 1);
  CHECK(dates.count("on march 15") == 1);
  CHECK(dates.size() >= 2);
  CHECK(yields_of(f.result.grammar, nt("EVENT", 4)).size() >= 2);

  const auto all = enumerate(f.result.grammar, 100000);
  CHECK(std::find(all.begin(), all.end(),
                  "yes , i found one event tomorrow . team sync starts at 10 am .") != all.end());
  for (const auto& s : all) CHECK(contains(f.result.grammar, s));
}

TEST_CASE("found_one rule yields the aligned production") {
  const Pipeline p = calendar_pipeline();
  ExecContext ctx = p.fresh_context();
  DataflowGraph g = execute(fixture_graph(p, "meetings_tomorrow"), *p.registry, ctx);
  const TransductionRule* rule = nullptr;
  for (const auto& r : p.transducer->rules().rules)
    if (r.name == "found_one") rule = &r;
  REQUIRE(rule);
  const auto prod = apply_rule(*rule, g, NodeId("v1"), *p.registry, ctx);
  REQUIRE(prod);
  CHECK(to_string(*prod) ==
        R"(S@v1 -> "i" "found" LEX@v3 "event" PP@v2 "." EVENT@v4 ".")");
  CHECK(g.value(NodeId("v3")) == Value(1));

  // Applying again reuses the let nodes.
  const std::size_t size = g.size();
  CHECK(apply_rule(*rule, g, NodeId("v1"), *p.registry, ctx));
  CHECK(g.size() == size);

  // A failing guard leaves the graph as it was.
  for (const auto& r : p.transducer->rules().rules)
    if (r.name == "found_many") CHECK_FALSE(apply_rule(r, g, NodeId("v1"), *p.registry, ctx));
  CHECK(g.size() == size);
}

TEST_CASE("missing EVENT coverage is reported by name") {
  auto reg = std::make_shared<FunctionRegistry>(calendar_registry());
  const std::string rules = R"(start S
nonterminals S PP EVENT
rule S as yes on nonEmpty(events) where self == true say "yes , {S <events>}"
rule S as found_one on findEventsOnDate(date) where size(self) == 1
  let num = size(self); event = first(self)
  say "i found {LEX <num>} event {PP <date>} . {EVENT <event>} ."
rule PP as date_lex on d say "{LEX <d>}"
)";
  const Transducer t = Transducer::from_text(rules, reg);
  const Pipeline p = calendar_pipeline();
  ExecContext ctx = p.fresh_context();
  const DataflowGraph g = execute(fixture_graph(p, "meetings_tomorrow"), *reg, ctx);
  try {
    transduce(t, g, ctx);
    FAIL("expected a coverage error");
  } catch (const CoverageError& e) {
    CHECK(std::string(e.what()).find("EVENT@v4") != std::string::npos);
  }
}

TEST_CASE("recursion deeper than max_depth is refused") {
  const Pipeline p = calendar_pipeline();
  ExecContext ctx = p.fresh_context();
  const DataflowGraph g = execute(
      parse_graph("(eventAttendees (first (findEventsOnDate (Date \"2022-03-22\"))))",
                  p.registry.get()),
      *p.registry, ctx);
  TransduceOptions opts;
  CHECK_NOTHROW(transduce(*p.transducer, g, ctx, opts));
  opts.max_depth = 1;
  CHECK_THROWS_AS(transduce(*p.transducer, g, ctx, opts), DepthExceeded);
}

TEST_CASE("rule syntax errors carry a line") {
  auto reg = std::make_shared<FunctionRegistry>(calendar_registry());
  CHECK_THROWS_AS(Transducer::from_text("start S\nnonterminals S\nrule S as x on say \"a\"\n", reg),
                  SyntaxError);
  CHECK_THROWS_AS(
      Transducer::from_text("start S\nnonterminals S\nrule S as x on size(l) say \"{S <q>}\"\n", reg),
      Error);
}

TEST_CASE("built-in lexicalization") {
  const DateTime now = DateTime::parse(kNow);
  using W = std::vector<std::vector<std::string>>;
  CHECK(lexicalize(Value(2), now) == W{{"two"}, {"2"}});
  CHECK(lexicalize(Value(40), now) == W{{"40"}});
  CHECK(lexicalize(Value(true), now) == W{{"yes"}});
  CHECK(lexicalize(Value(Date::parse("2022-03-15")), now) == W{{"tomorrow"}});
  CHECK(lexicalize(Value(Date::parse("2022-03-22")), now) == W{{"on", "march", "22"}});
  CHECK(lexicalize(Value(Time::parse("10:30")), now) == W{{"10:30", "am"}});
  CHECK(lexicalize(Value(Time::parse("14:00")), now) == W{{"2", "pm"}});
}

TEST_CASE("transduction is deterministic") {
  const Pipeline p = calendar_pipeline();
  for (const auto& name : fixture_graphs()) {
    CAPTURE(name);
    const Fixture a = transduce_fixture(p, fixture_graph(p, name));
    const Fixture b = transduce_fixture(p, fixture_graph(p, name));
    CHECK(a.result.grammar.dump() == b.result.grammar.dump());
    CHECK(serialize_graph(a.result.graph) == serialize_graph(b.result.graph));
  }
}
