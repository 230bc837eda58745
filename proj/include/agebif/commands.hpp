#pragma once

#include <filesystem>

#include "agebif/config.hpp"

namespace agebif {

// The five runnable studies.  Each builds the discrete problem from the
// config, writes its artifacts into out_dir (atomically, fixed names) and
// prints a short human-readable summary to stdout.  Errors are thrown:
// InvalidArgument for configuration/precondition problems, other Error
// subclasses for solver failures.
void cmd_normalize(const RunConfig& rc, const std::filesystem::path& out_dir);
void cmd_semitrivial(const RunConfig& rc, const std::filesystem::path& out_dir);
void cmd_bifpoints(const RunConfig& rc, const std::filesystem::path& out_dir);
void cmd_branch(const RunConfig& rc, const std::filesystem::path& out_dir);
void cmd_simulate(const RunConfig& rc, const std::filesystem::path& out_dir);

} // namespace agebif
