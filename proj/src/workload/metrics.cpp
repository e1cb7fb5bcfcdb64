#include "workload/metrics.hpp"

#include <sstream>

namespace railsim::workload {

std::string to_csv(const std::string& scheme, const std::string& scenario,
                   const ScenarioStats& stats, bool with_header) {
  std::ostringstream os;
  if (with_header)
    os << "scheme,scenario,group,samples,mean_delay_us,p95_delay_us,dropped\n";
  for (const StatRow& r : stats.rows) {
    os << scheme << ',' << scenario << ',' << r.group << ',' << r.samples
       << ',';
    if (r.mean_delay_us >= 0) os << r.mean_delay_us;
    os << ',';
    if (r.p95_delay_us >= 0) os << r.p95_delay_us;
    os << ',' << r.dropped << '\n';
  }
  return os.str();
}

}  // namespace railsim::workload
