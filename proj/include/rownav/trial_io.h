#ifndef ROWNAV_TRIAL_IO_H_
#define ROWNAV_TRIAL_IO_H_

// On-disk trial log:
//   trajectory.csv   time,true_e,true_n,true_u,heading,v_cmd,omega_cmd,phase,row_index
//   gps.csv          time,kind,e,n,u,accuracy
//   commands.csv     time,v,omega,e_y,e_theta (errors empty when unavailable)
//   transitions.csv  time,row_index,from,to,error_deg
//   events.jsonl     {"time","phase","event","reason"} per line
//   result.json      completion flags and counts
// CSV files start with a "# schema <name> <version>" line.

#include <filesystem>
#include <string>

#include "rownav/simulator.h"

namespace rownav {

inline constexpr int kTrialLogVersion = 1;

std::string TrajectoryCsv(const TrialLog& log);
std::string GpsCsv(const TrialLog& log);
std::string CommandsCsv(const TrialLog& log);
std::string TransitionsCsv(const TrialLog& log);
std::string EventsJsonl(const TrialLog& log);
std::string ResultJson(const TrialLog& log);

void WriteTrialLog(const TrialLog& log, const std::filesystem::path& dir);

// Reads trajectory.csv and, when present, gps.csv, events.jsonl and
// result.json. Throws SchemaError on missing columns, ragged or malformed
// rows, or a schema line that does not match.
TrialLog ReadTrialLog(const std::filesystem::path& dir);
// Individual readers; `file` is the CSV itself.
void ReadTrajectory(const std::filesystem::path& file, TrialLog& log);
void ReadGps(const std::filesystem::path& file, TrialLog& log);

NavPhase NavPhaseFromInt(int value);

}  // namespace rownav

#endif  // ROWNAV_TRIAL_IO_H_
