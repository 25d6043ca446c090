#include "rownav/trial_io.h"

#include <fmt/format.h>

#include <sstream>

#include "json.hpp"
#include "rownav/errors.h"
#include "rownav/io.h"

namespace rownav {
namespace {

std::string SchemaLine(std::string_view name) {
  return fmt::format("# schema {} {}\n", name, kTrialLogVersion);
}

void CheckSchema(const CsvTable& table, std::string_view name,
                 const std::filesystem::path& file) {
  const std::string expected = SchemaLine(name).substr(0, SchemaLine(name).size() - 1);
  for (const auto& line : table.metadata) {
    if (line.rfind("# schema ", 0) != 0) continue;
    if (line != expected) {
      throw SchemaError(fmt::format("{}: expected '{}', found '{}'",
                                    file.string(), expected, line));
    }
    return;
  }
  throw SchemaError(fmt::format("{}: missing schema line", file.string()));
}

}  // namespace

NavPhase NavPhaseFromInt(int value) {
  if (value < 0 || value > static_cast<int>(NavPhase::kCompleted)) {
    throw SchemaError(fmt::format("invalid phase {}", value));
  }
  return static_cast<NavPhase>(value);
}

std::string TrajectoryCsv(const TrialLog& log) {
  std::string out = SchemaLine("trajectory");
  out += "time,true_e,true_n,true_u,heading,v_cmd,omega_cmd,phase,row_index\n";
  for (const auto& s : log.trajectory) {
    out += fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.8f},{:.6f},{:.6f},{},{}\n",
                       s.time, s.pose.position.east, s.pose.position.north,
                       s.pose.position.up, s.pose.heading, s.command.v,
                       s.command.omega, static_cast<int>(s.phase), s.row_index);
  }
  return out;
}

std::string GpsCsv(const TrialLog& log) {
  std::string out = SchemaLine("gps");
  out += "time,kind,e,n,u,accuracy\n";
  for (const auto& f : log.gps) {
    out += fmt::format("{:.6f},{},{:.6f},{:.6f},{:.6f},{:.4f}\n", f.time,
                       GpsKindName(f.kind), f.position.east, f.position.north,
                       f.position.up, f.accuracy);
  }
  return out;
}

std::string CommandsCsv(const TrialLog& log) {
  std::string out = SchemaLine("commands");
  out += "time,v,omega,e_y,e_theta\n";
  for (const auto& c : log.commands) {
    out += fmt::format("{:.6f},{:.6f},{:.6f}", c.time, c.command.v, c.command.omega);
    if (c.errors) {
      out += fmt::format(",{:.6f},{:.8f}\n", c.errors->e_y, c.errors->e_theta);
    } else {
      out += ",,\n";
    }
  }
  return out;
}

std::string TransitionsCsv(const TrialLog& log) {
  std::string out = SchemaLine("transitions");
  out += "time,row_index,from,to,error_deg\n";
  for (const auto& t : log.transitions) {
    out += fmt::format("{:.6f},{},{},{},{:.6f}\n", t.time, t.row_index,
                       static_cast<int>(t.from), static_cast<int>(t.to),
                       t.error_deg);
  }
  return out;
}

std::string EventsJsonl(const TrialLog& log) {
  std::string out;
  for (const auto& e : log.events) {
    nlohmann::ordered_json j;
    j["time"] = std::stod(fmt::format("{:.6f}", e.time));
    j["phase"] = NavPhaseName(e.phase);
    j["event"] = e.event;
    j["reason"] = e.reason;
    out += j.dump() + "\n";
  }
  return out;
}

std::string ResultJson(const TrialLog& log) {
  nlohmann::ordered_json j;
  j["schema_version"] = kTrialLogVersion;
  j["completed"] = log.completed;
  j["aborted"] = log.aborted;
  j["interventions"] = log.interventions;
  j["rows_completed"] = log.rows_completed;
  j["sim_time"] = std::stod(fmt::format("{:.6f}", log.sim_time));
  return j.dump(2) + "\n";
}

void WriteTrialLog(const TrialLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteTextFile(dir / "trajectory.csv", TrajectoryCsv(log));
  WriteTextFile(dir / "gps.csv", GpsCsv(log));
  WriteTextFile(dir / "commands.csv", CommandsCsv(log));
  WriteTextFile(dir / "transitions.csv", TransitionsCsv(log));
  WriteTextFile(dir / "events.jsonl", EventsJsonl(log));
  WriteTextFile(dir / "result.json", ResultJson(log));
}

void ReadTrajectory(const std::filesystem::path& file, TrialLog& log) {
  const CsvTable t = ReadCsv(file);
  CheckSchema(t, "trajectory", file);
  const auto time = t.Column("time"), e = t.Column("true_e"),
             n = t.Column("true_n"), u = t.Column("true_u"),
             h = t.Column("heading"), v = t.Column("v_cmd"),
             w = t.Column("omega_cmd"), phase = t.Column("phase"),
             row = t.Column("row_index");
  log.trajectory.clear();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    TrajectorySample s;
    s.time = t.Number(i, time);
    s.pose.position = {t.Number(i, e), t.Number(i, n), t.Number(i, u)};
    s.pose.heading = t.Number(i, h);
    s.command = {t.Number(i, v), t.Number(i, w)};
    s.phase = NavPhaseFromInt(static_cast<int>(t.Number(i, phase)));
    s.row_index = static_cast<int>(t.Number(i, row));
    log.trajectory.push_back(s);
  }
}

void ReadGps(const std::filesystem::path& file, TrialLog& log) {
  const CsvTable t = ReadCsv(file);
  CheckSchema(t, "gps", file);
  const auto time = t.Column("time"), kind = t.Column("kind"),
             e = t.Column("e"), n = t.Column("n"), u = t.Column("u"),
             acc = t.Column("accuracy");
  log.gps.clear();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    GpsFix f;
    f.time = t.Number(i, time);
    const std::string& k = t.rows[i][kind];
    if (k == "rtk") {
      f.kind = GpsKind::kRtk;
    } else if (k == "coarse") {
      f.kind = GpsKind::kCoarse;
    } else {
      throw SchemaError(fmt::format("{}: unknown fix kind '{}'", file.string(), k));
    }
    f.position = {t.Number(i, e), t.Number(i, n), t.Number(i, u)};
    f.accuracy = t.Number(i, acc);
    log.gps.push_back(f);
  }
}

TrialLog ReadTrialLog(const std::filesystem::path& dir) {
  TrialLog log;
  ReadTrajectory(dir / "trajectory.csv", log);
  if (std::filesystem::exists(dir / "gps.csv")) ReadGps(dir / "gps.csv", log);
  if (std::filesystem::exists(dir / "events.jsonl")) {
    std::istringstream in(ReadTextFile(dir / "events.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        NavEvent e;
        e.time = j.at("time").get<double>();
        e.event = j.at("event").get<std::string>();
        e.reason = j.at("reason").get<std::string>();
        log.events.push_back(e);
        if (e.event == "intervention") ++log.interventions;
      } catch (const nlohmann::json::exception& ex) {
        throw SchemaError(fmt::format("events.jsonl: {}", ex.what()));
      }
    }
  }
  if (std::filesystem::exists(dir / "result.json")) {
    try {
      const auto j = nlohmann::json::parse(ReadTextFile(dir / "result.json"));
      if (j.at("schema_version").get<int>() != kTrialLogVersion) {
        throw SchemaError("result.json: unsupported schema version");
      }
      log.completed = j.at("completed").get<bool>();
      log.aborted = j.at("aborted").get<bool>();
      log.interventions = j.at("interventions").get<int>();
      log.rows_completed = j.at("rows_completed").get<int>();
      log.sim_time = j.at("sim_time").get<double>();
    } catch (const nlohmann::json::exception& ex) {
      throw SchemaError(fmt::format("result.json: {}", ex.what()));
    }
  }
  return log;
}

}  // namespace rownav
