#pragma once

#include <iosfwd>
#include <string>

#include "pairtrees/global_model.hpp"
#include "pairtrees/local_model.hpp"

namespace pairtrees {

// A fitted model plus everything needed to use it later: node universes,
// feature names, and the fit-time configuration echo. The format is line
// based text with doubles stored as 16-digit hex bit patterns, so a
// write/read cycle reproduces the model bit for bit.
struct ModelBundle {
    std::string kind;         // "global" | "local-so" | "local-mo"
    std::string config_echo;  // one line, informational only
    std::vector<std::string> feature_names_row;
    std::vector<std::string> feature_names_col;
    GlobalModel global;  // when kind == "global"
    LocalModel local;    // otherwise
};

void write_model_bundle(std::ostream& out, const ModelBundle& bundle);
ModelBundle read_model_bundle(std::istream& in, const std::string& origin);
void write_model_bundle_file(const std::string& path, const ModelBundle& bundle);
ModelBundle read_model_bundle_file(const std::string& path);

// Single-ensemble text round-trip (exact), used by tests.
std::string ensemble_to_text(const EnsembleModel& model);
EnsembleModel ensemble_from_text(const std::string& text);

// Exact double <-> hex-bits conversion used throughout the format.
std::string double_to_hex(double v);
double double_from_hex(const std::string& s);

}  // namespace pairtrees
