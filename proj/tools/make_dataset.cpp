// Writes the synthetic calendar dataset: train.jsonl and test.jsonl with
// inline graphs. Gold responses are derivations of each example's grammar in
// which every nonterminal takes its first production with probability
// --prefer and otherwise a uniformly chosen alternative.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "flowgen/calendar.hpp"
#include "flowgen/errors.hpp"
#include "flowgen/sexpr.hpp"
#include "flowgen/transducer.hpp"
#include "json.hpp"

using namespace flowgen;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

struct DateExpr {
  std::string sexp, phrase;
};

DateExpr random_date(std::mt19937_64& rng) {
  static const std::vector<std::string> nums{"zero", "one", "two", "three", "four",
                                             "five", "six", "seven", "eight", "nine"};
  const double u = std::uniform_real_distribution<double>(0, 1)(rng);
  if (u < 0.2) return {"(today)", "today"};
  if (u < 0.45) return {"(tomorrow)", "tomorrow"};
  if (u < 0.65) {
    const int n = std::uniform_int_distribution<int>(2, 9)(rng);
    return {"(addDays (today) (Number " + std::to_string(n) + "))", "in " + nums[n] + " days"};
  }
  const int d = std::uniform_int_distribution<int>(7, 31)(rng);
  return {"(Date \"2022-03-" + std::string(d < 10 ? "0" : "") + std::to_string(d) + "\")",
          "on march " + std::to_string(d)};
}

struct Draft {
  std::string graph, utterance;
};

Draft random_draft(std::mt19937_64& rng) {
  static const std::vector<std::string> subjects{"design review", "team sync", "lunch",
                                                 "planning", "budget meeting", "coffee chat"};
  static const std::vector<std::string> people{"alice", "bob", "carol", "dave", "erin", "grace"};
  const DateExpr d = random_date(rng);
  const std::string find = "(findEventsOnDate " + d.sexp + ")";
  const double u = std::uniform_real_distribution<double>(0, 1)(rng);
  if (u < 0.2) return {"(nonEmpty " + find + ")", "do i have any meetings " + d.phrase + " ?"};
  if (u < 0.35) return {find, "what is on my calendar " + d.phrase + " ?"};
  if (u < 0.5) return {"(size " + find + ")", "how many meetings do i have " + d.phrase + " ?"};
  if (u < 0.62)
    return {"(eventStart (first " + find + "))",
            "when does my first meeting " + d.phrase + " start ?"};
  if (u < 0.74)
    return {"(eventSubject (first " + find + "))", "what is my first meeting " + d.phrase + " ?"};
  if (u < 0.86)
    return {"(eventAttendees (first " + find + "))",
            "who is coming to my first meeting " + d.phrase + " ?"};
  const int h = std::uniform_int_distribution<int>(9, 16)(rng);
  auto hh = [](int x) { return std::string(x < 10 ? "0" : "") + std::to_string(x) + ":00"; };
  const std::string& subject = pick(subjects, rng);
  const std::string& who = pick(people, rng);
  return {"(createEvent (Text \"" + subject + "\") (dateTime " + d.sexp + " (Time \"" + hh(h) +
              "\")) (dateTime " + d.sexp + " (Time \"" + hh(h + 1) + "\")) (Text \"" + who + "\"))",
          "schedule " + subject + " with " + who + " " + d.phrase + " at " +
              std::to_string(h > 12 ? h - 12 : h) + (h >= 12 ? " pm" : " am")};
}

void derive(const Qcfg& g, const QcfgNonterminal& nt, double prefer, std::mt19937_64& rng,
            std::vector<std::string>& out) {
  const auto& options = g.productions_for(nt);
  std::size_t choice = options.front();
  if (options.size() > 1 && std::uniform_real_distribution<double>(0, 1)(rng) >= prefer)
    choice = options[std::uniform_int_distribution<std::size_t>(1, options.size() - 1)(rng)];
  for (const auto& sym : g.productions()[choice].rhs) {
    if (const auto* t = std::get_if<Terminal>(&sym))
      out.push_back(t->word);
    else
      derive(g, std::get<QcfgNonterminal>(sym), prefer, rng, out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic calendar dataset"};
  std::string rules = "data/calendar/calendar.rules", calendar = "data/calendar/calendar.json",
              out_dir = "data/synthetic", now_text = "2022-03-14T09:00";
  std::size_t n_train = 2000, n_test = 200;
  std::uint64_t seed = 13;
  double prefer = 0.8;
  app.add_option("--rules", rules)->required();
  app.add_option("--calendar", calendar)->required();
  app.add_option("--out-dir", out_dir);
  app.add_option("--now", now_text);
  app.add_option("--train", n_train);
  app.add_option("--test", n_test);
  app.add_option("--seed", seed);
  app.add_option("--prefer", prefer, "Probability of the first production");
  CLI11_PARSE(app, argc, argv);

  try {
    auto registry = std::make_shared<FunctionRegistry>(calendar_registry());
    const Transducer transducer = Transducer::from_text(slurp(rules), registry);
    const Calendar base = Calendar::from_json(slurp(calendar));
    const DateTime now = DateTime::parse(now_text);
    std::mt19937_64 rng(seed);
    std::filesystem::create_directories(out_dir);

    std::size_t counter = 0;
    for (const auto& [name, count] : {std::pair<std::string, std::size_t>{"train", n_train},
                                      {"test", n_test}}) {
      std::ofstream out(std::filesystem::path(out_dir) / (name + ".jsonl"), std::ios::binary);
      for (std::size_t made = 0; made < count;) {
        const Draft d = random_draft(rng);
        ExecContext ctx{now, std::make_shared<Calendar>(base)};
        std::optional<TransduceResult> tr;
        try {
          const DataflowGraph g = execute(parse_graph(d.graph, registry.get()), *registry, ctx);
          tr = transduce(transducer, g, ctx);
        } catch (const ExecutionError&) {
          continue;  // e.g. first() of an empty day
        } catch (const CoverageError&) {
          continue;  // e.g. attendees of an event nobody attends
        }
        std::vector<std::string> words;
        derive(tr->grammar, tr->grammar.start(), prefer, rng, words);
        nlohmann::ordered_json j;
        char id[32];
        std::snprintf(id, sizeof id, "%s-%04zu", name.c_str(), counter++);
        j["id"] = id;
        j["graph"] = d.graph;
        j["utterance"] = d.utterance;
        j["gold"] = join_words(words);
        out << j.dump() << "\n";
        ++made;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "make_dataset: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
