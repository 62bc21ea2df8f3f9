#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade/dynamics.hpp"

namespace cascade::audit {

inline constexpr const char* kDirectoryVariable = "CASCADE_TRACE_AUDIT_DIR";

/// Checks the terminal verdict of a finished trace: transferring exactly when
/// the origin is still active, and a final outflow of 0 or λ.
inline std::string trace_violation(const CascadeTrace& trace, double tol = 1e-9) {
  if (origin_active_equivalence(trace, tol)) return {};
  std::ostringstream out;
  out.precision(17);
  out << "T=" << trace.termination_time << " transferring=" << trace.transferring
      << " origin_active=" << int(trace.final_state().node_active[0]) << " outflow=" << trace.final_outflow
      << " lambda=" << trace.inflow;
  return out.str();
}

struct Tally {
  std::string source;
  std::size_t traces = 0;
  std::size_t violations = 0;
  std::vector<std::string> examples;  // first few violations

  void record(const CascadeTrace& trace) {
    ++traces;
    auto v = trace_violation(trace);
    if (v.empty()) return;
    ++violations;
    if (examples.size() < 5) examples.push_back(std::move(v));
  }

  nlohmann::json to_json() const {
    return {{"source", source}, {"traces", traces}, {"violations", violations}, {"examples", examples}};
  }
};

/// Records every finished trace of this process and writes the tally to
/// $CASCADE_TRACE_AUDIT_DIR/<source>.json at exit. Does nothing when the
/// variable is unset.
class Recorder {
 public:
  static Recorder& instance() {
    static Recorder r;
    return r;
  }

  void install(std::string source) {
    const char* dir = std::getenv(kDirectoryVariable);
    std::lock_guard lock(mutex_);
    tally_.source = std::move(source);
    if (dir && *dir) dir_ = dir;
    trace_observer() = [this](const FlowNetwork&, const CascadeTrace& trace) {
      std::lock_guard l(mutex_);
      tally_.record(trace);
    };
  }

  void rename(std::string source) {
    std::lock_guard lock(mutex_);
    tally_.source = std::move(source);
  }

  Tally snapshot() const {
    std::lock_guard lock(mutex_);
    return tally_;
  }

  ~Recorder() {
    if (dir_.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::ofstream out(std::filesystem::path(dir_) / (tally_.source + ".json"));
    out << tally_.to_json().dump(2) << '\n';
  }

 private:
  Recorder() = default;
  mutable std::mutex mutex_;
  std::string dir_;
  Tally tally_;
};

inline void install(std::string source) { Recorder::instance().install(std::move(source)); }

/// Every tally file in the audit directory.
inline std::vector<Tally> read_all(const std::string& dir) {
  std::vector<Tally> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return out;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::ifstream in(p);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) continue;
    Tally t;
    t.source = j.value("source", p.stem().string());
    t.traces = j.value("traces", std::size_t(0));
    t.violations = j.value("violations", std::size_t(0));
    t.examples = j.value("examples", std::vector<std::string>{});
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace cascade::audit
