#include <cmath>
#include <sstream>

#include "dfjss/llm.hpp"
#include "text.hpp"

namespace dfjss::llm {

using detail::num;

namespace {

std::string_view objective_meaning(Objective o) {
  switch (o) {
    case Objective::Tmax: return "maximum tardiness, the largest max(0, completion - due date) over jobs";
    case Objective::Tmean: return "mean tardiness, the average of max(0, completion - due date)";
    case Objective::Fmean: return "mean flowtime, the average of completion - release";
    case Objective::WTmean: return "mean weighted tardiness, the average of weight x tardiness";
    case Objective::WFmean: return "mean weighted flowtime, the average of weight x flowtime";
  }
  return "";
}

std::string objective_names(const std::vector<Objective>& objs) {
  std::string out;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (i) out += i + 1 == objs.size() ? " and " : ", ";
    out += to_string(objs[i]);
  }
  return out;
}

std::string render(const std::vector<PromptSection>& sections) {
  std::string out;
  for (const auto& s : sections) {
    if (!out.empty()) out += "\n";
    out += "## " + s.title + "\n\n" + s.body;
    if (out.back() != '\n') out += '\n';
  }
  return out;
}

std::string rule_block(const RulePair& r) { return "```rule\n" + format_rule_pair(r) + "```\n"; }

std::string function_semantics() {
  return "Functions: a + b, a - b, a * b, a / b (protected: returns 1 when b is 0), min(a, b), max(a, b).\n";
}

std::string shop_context(const Scenario& scenario) {
  std::ostringstream out;
  out << "We search for dispatching rules for a dynamic flexible job shop. Jobs arrive over time and are not "
         "known before their release. Each job is an ordered sequence of operations, and each operation can run "
         "on any machine of its eligible set with a machine-dependent processing time. Moving a job to a machine "
         "takes transport time. A machine processes one operation at a time and never interrupts it.\n\n"
         "Two rules build the schedule. When an operation becomes ready, the routing rule scores every eligible "
         "machine and the lowest score receives the operation. When a machine becomes idle, the sequencing rule "
         "scores every operation in its queue and the lowest score is processed next.\n\n";
  out << "Scenario " << scenario.name << ": objectives " << objective_names(scenario.objectives)
      << ", target machine utilization " << num(scenario.utilization) << ".\n";
  return out.str();
}

std::string references_text(const std::vector<ReferenceHeuristic>& refs) {
  std::string out;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    out += "Heuristic " + std::to_string(i + 1);
    if (!refs[i].provenance.empty()) out += " (evolved for " + refs[i].provenance + ")";
    if (!refs[i].note.empty()) out += ", " + refs[i].note;
    out += ":\n" + rule_block(refs[i].rules) + "\n";
  }
  return out;
}

std::string semantics_text() { return "Terminals:\n" + terminal_glossary() + "\n" + function_semantics(); }

std::string preference_text(const PreferenceWeights& prefs) {
  std::string out = "Minimize\n\n    F = " + objective_expression(prefs) + "\n\nwhere\n";
  for (auto o : prefs.objectives) out += "- " + std::string(to_string(o)) + ": " + std::string(objective_meaning(o)) + "\n";
  out += "\nA larger weight means the objective matters more to the user. Good candidates trade the objectives "
         "off in these proportions.\n";
  return out;
}

std::string output_contract(int n) {
  std::ostringstream out;
  out << "Return exactly " << n << " candidate rule pairs, each in its own fenced block:\n\n"
      << "```rule\nrouting: <expression>\nsequencing: <expression>\n```\n\n"
      << "Expressions may use only the terminals listed above (case-sensitive), the operators + - * /, the calls "
         "min(a, b) and max(a, b), and parentheses. Numeric constants and other functions are not allowed. Each "
         "expression must have tree depth at most 8; a single terminal has depth 1. Lower scores mean higher "
         "priority. Make the candidates differ from each other.\n\n"
      << "After the rule blocks, add a section headed `## Insights` listing the principles you extracted from "
         "the reference heuristics and how they shaped your candidates.\n";
  return out.str();
}

bool same_task(const Scenario& a, const Scenario& b) {
  return a.objectives == b.objectives && a.lambdas == b.lambdas && a.utilization == b.utilization;
}

}  // namespace

PreferenceWeights preferences_of(const Scenario& scenario) { return {scenario.objectives, scenario.lambdas}; }

std::string objective_expression(const PreferenceWeights& prefs) {
  if (prefs.objectives.empty() || prefs.objectives.size() != prefs.lambdas.size())
    throw std::invalid_argument("preference weights need one weight per objective");
  double sum = 0;
  for (double l : prefs.lambdas) {
    if (!(l >= 0 && l <= 1)) throw std::invalid_argument("preference weights must lie in [0, 1]");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("preference weights must sum to 1");
  std::string out;
  for (std::size_t i = 0; i < prefs.objectives.size(); ++i) {
    if (i) out += " + ";
    out += num(prefs.lambdas[i]) + "×" + std::string(to_string(prefs.objectives[i]));
  }
  return out;
}

std::string terminal_glossary() {
  std::string out;
  for (Terminal t : kAllTerminals) out += "- " + std::string(to_string(t)) + ": " + std::string(describe(t)) + "\n";
  return out;
}

PromptSpec build_init_prompt(const Scenario& scenario, const std::vector<ReferenceHeuristic>& references,
                             const PreferenceWeights& prefs, int n_requested) {
  if (n_requested < 1) throw std::invalid_argument("n_requested must be at least 1");
  PromptSpec p;
  p.kind = "init";
  p.zero_shot = references.empty();

  std::string refs = p.zero_shot
                         ? "No reference heuristics are available. Draw on general dispatching knowledge.\n\n"
                         : "The following rule pairs were evolved by genetic programming on related tasks. Study "
                           "which terminals and structures make them effective.\n\n" +
                               references_text(references);
  refs += semantics_text();

  p.sections = {{"Problem context", shop_context(scenario)},
                {"Reference heuristics", refs},
                {"Task preferences", preference_text(prefs)},
                {"Output format", output_contract(n_requested)}};
  p.text = render(p.sections);
  return p;
}

PromptSpec build_transfer_prompt(const std::vector<ReferenceHeuristic>& source_refs, const Scenario& source,
                                 const Scenario& target, const PreferenceWeights& prefs, int n_requested,
                                 std::string_view insights) {
  if (same_task(source, target)) throw std::invalid_argument("source and target scenarios define the same task");
  if (n_requested < 1) throw std::invalid_argument("n_requested must be at least 1");
  PromptSpec p;
  p.kind = "transfer";
  p.zero_shot = source_refs.empty();

  std::string src = "These rule pairs were evolved for scenario " + source.name + " (objectives " +
                    objective_names(source.objectives) + ", utilization " + num(source.utilization) + ").\n\n" +
                    references_text(source_refs);
  if (!insights.empty()) src += "Insights recorded for the source task:\n" + std::string(insights) + "\n\n";
  src += semantics_text();

  std::string steps =
      "Adapt the source heuristics to the target task in three steps.\n\n"
      "1. Principle generalization: identify the components of the source rules that help regardless of the "
      "objective, such as balancing machine load or favouring short operations, and keep them.\n"
      "2. Instance adaptation: the target optimizes " +
      objective_names(target.objectives) + " at utilization " + num(target.utilization) +
      ". Adjust the rules to the target statistics: congestion level, how tight due dates are, and which job "
      "attributes the target objectives reward.\n"
      "3. Cross-domain mapping: translate the features that drove the source objectives into the target's "
      "decision state, replacing terminals that matter less for the target with ones that matter more.\n\n";
  steps += preference_text(prefs);

  p.sections = {{"Problem context", shop_context(target)},
                {"Source heuristics", src},
                {"Transfer steps", steps},
                {"Output format", output_contract(n_requested)}};
  p.text = render(p.sections);
  return p;
}

PromptSpec build_explain_prompt(const RulePair& best, const Scenario& scenario) {
  if (scenario.objectives.empty()) throw std::invalid_argument("scenario has no objectives");
  PromptSpec p;
  p.kind = "explain";

  std::string task = "The rules were evolved for scenario " + scenario.name + " at machine utilization " +
                     num(scenario.utilization) + ".\n\n";
  if (scenario.lambdas.size() == scenario.objectives.size()) {
    task += preference_text(preferences_of(scenario));
  } else {
    task += "Objectives: " + objective_names(scenario.objectives) + "\n";
  }

  p.sections = {
      {"Evolved heuristic",
       "Routing picks the machine with the lowest score; sequencing picks the queued operation with the lowest "
       "score.\n\n" + rule_block(best)},
      {"Terminal semantics", semantics_text()},
      {"Scenario", task},
      {"Report format",
       "Write a report in markdown with these sections:\n\n"
       "## Decision logic\nExplain step by step how each rule ranks its options and when each term dominates.\n\n"
       "## Dominant terminals\nName the terminals with the most influence on the decisions and why.\n\n"
       "## Preference alignment\nRelate the rules to the weighted objectives above.\n\n"
       "## Summary for non-experts\nA short plain-language summary for shop floor staff, without formulas.\n"}};
  p.text = render(p.sections);
  return p;
}

}  // namespace dfjss::llm
