#pragma once

#include <iosfwd>
#include <string>

#include "brwlab/model.hpp"

namespace brw {

// Line-oriented text format:
//
//   # brwlab-model 1
//   # scenario <name>
//   # param <key>=<value>          (repeated)
//   # truncation <index>
//   # labeling <text>
//   # interior <id> <id> ...
//   A <vertex> <probability> <v>:<count> ...   one line per atom
//   P <vertex> rho=<n>:<p>,... void=<p> <v>:<p> ...   product-form law
//
// Product-form laws are kept compact instead of being expanded into atoms.
// Doubles use 17 significant digits, so a write/read cycle is lossless.
void write_model(std::ostream& out, const BrwModel& model);
std::string serialize_model(const BrwModel& model);

BrwModel read_model(std::istream& in);
BrwModel parse_model(const std::string& text);

// Git blob hash (SHA-1 of "blob <size>\0" + bytes), hex encoded.
std::string content_hash(const std::string& bytes);
std::string model_hash(const BrwModel& model);

}  // namespace brw
