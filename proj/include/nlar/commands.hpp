#pragma once

#include <iosfwd>
#include <string>

#include "nlar/errors.hpp"
#include "nlar/model.hpp"
#include "nlar/run_config.hpp"

namespace nlar {

/// Single-column CSV, optional non-numeric header line.
TimeSeries read_series_csv(const std::string& path, int order);
void write_series_csv(const TimeSeries& series, const std::string& path);

// Each command writes one JSON record to `out` and returns the exit status.
// Failures are thrown as nlar::Error.
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_fit(const RunConfig& cfg, std::ostream& out);
int cmd_predict(const RunConfig& cfg, std::ostream& out);
int cmd_interval(const RunConfig& cfg, std::ostream& out);
int cmd_experiment(const RunConfig& cfg, std::ostream& out);

int run_command(const RunConfig& cfg, std::ostream& out);

/// Process exit status for an error class: parse/domain 2, fit 3, explosion 4, io 5.
int exit_code(ErrorKind kind);

/// Parses flags (and an optional --config file), runs the command and maps
/// failures to a JSON error record on `err` plus a nonzero status.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nlar
