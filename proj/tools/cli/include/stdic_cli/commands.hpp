#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stdic/image.hpp"
#include "stdic_cli/config.hpp"

namespace stdic::cli {

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  bool quantize_8bit = false;
  bool per_frame = false;
};

// Config file plus command-line overrides.
ExperimentConfig effective_config(const CommandOptions& options);

// Frames are frame_0000.<ext>, frame_0001.<ext>, ... with ext f64 or pgm.
std::filesystem::path frame_path(const std::filesystem::path& dir, int index, const std::string& ext);
// Reads frame_count frames when metadata.txt names it, otherwise every
// consecutive frame present. Throws Io naming the first missing path.
ImageSequence load_frames(const std::filesystem::path& dir);

void cmd_synth(const CommandOptions& options, std::ostream& log);
void cmd_analyze(const CommandOptions& options, std::ostream& log);
void cmd_metrics(const CommandOptions& options, std::ostream& log);
void cmd_reproduce(const std::string& name, const CommandOptions& options, std::ostream& log);

// Whole command line; returns the process exit code (0 ok, 1 usage or config
// error, 2 runtime failure).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stdic::cli
