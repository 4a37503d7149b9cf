#include <sstream>

#include "dfjss/llm.hpp"
#include "text.hpp"

namespace dfjss::llm {

using detail::num;

std::string report_appendix(const RulePair& best, const Scenario& scenario, std::optional<double> test_performance) {
  std::ostringstream out;
  out << "## Appendix\n\n";
  out << "Scenario: " << scenario.name << "\n\n";
  out << "```rule\n" << format_rule_pair(best) << "```\n\n";
  out << "| Rule | Depth | Size |\n|---|---|---|\n";
  out << "| routing | " << best.routing.depth() << " | " << best.routing.size() << " |\n";
  out << "| sequencing | " << best.sequencing.depth() << " | " << best.sequencing.size() << " |\n\n";

  const TerminalHistogram r = terminal_histogram(best.routing);
  const TerminalHistogram s = terminal_histogram(best.sequencing);
  out << "Terminal histogram:\n\n| Terminal | Routing | Sequencing |\n|---|---|---|\n";
  for (Terminal t : kAllTerminals) {
    const int a = r.contains(t) ? r.at(t) : 0;
    const int b = s.contains(t) ? s.at(t) : 0;
    if (a || b) out << "| " << to_string(t) << " | " << a << " | " << b << " |\n";
  }
  if (test_performance) out << "\nTest performance (mean fitness over test instances): " << num(*test_performance) << "\n";
  return out.str();
}

Report generate_report(const RulePair& best, const Scenario& scenario, const ProviderConfig& provider,
                       std::optional<double> test_performance, ChatTransport* transport) {
  Report rep;
  std::string narrative;
  try {
    narrative = query(provider, build_explain_prompt(best, scenario), transport);
    rep.narrative_available = true;
  } catch (const ProviderError& e) {
    rep.error = e.what();
  }
  std::ostringstream out;
  out << "# Heuristic report: " << scenario.name << "\n\n";
  if (rep.narrative_available) {
    out << narrative;
    if (!narrative.empty() && narrative.back() != '\n') out << '\n';
  } else {
    out << kNarrativeUnavailable << " (" << rep.error << ")\n";
  }
  out << "\n" << report_appendix(best, scenario, test_performance);
  rep.text = out.str();
  return rep;
}

}  // namespace dfjss::llm
