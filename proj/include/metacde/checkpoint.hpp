#pragma once

#include <string>

#include "metacde/config.hpp"
#include "metacde/meta.hpp"

namespace metacde {

// Versioned text checkpoint. Layout:
//
//   METACDE-CKPT 1
//   kind metacde
//   <scalar architecture lines, fixed order>
//   net <name> <dims...>             one per feature net
//   tensor <name>.w<l> <out> <in>    then one row per line, %.17g values
//   tensor <name>.b<l> <out>         then one line
//   hash fnv1a64 <16 hex>            over every byte above it
//
// 17 significant digits round-trip doubles exactly, so save(load(file))
// reproduces the file byte for byte. Loading validates magic, hash, and
// architecture consistency before any parameter is touched.

std::string checkpoint_text(const MetaModel& m);
std::string checkpoint_text(const MetaNnModel& m);

void save_checkpoint(const std::string& path, const MetaModel& m);
void save_checkpoint(const std::string& path, const MetaNnModel& m);

// Self-describing load: the file's kind decides which member is populated.
struct LoadedModel {
  ModelKind kind = ModelKind::metacde;
  MetaModel cde;     // valid when kind == metacde
  MetaNnModel nn;    // valid when kind == metann
};
LoadedModel load_checkpoint(const std::string& path);  // DataError on any mismatch

}  // namespace metacde
