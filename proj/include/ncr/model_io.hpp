#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ncr/ncmodel.hpp"

namespace ncr {

// Parses and validates a model document. Errors carry the 1-based line of
// the offending value and its JSON pointer.
NCModel load_model(std::string_view document);
NCModel load_model_file(const std::string& path);

// Normalized form: fixed key order, canonical expression text, two-space
// indentation, trailing newline. save(load(save(m))) == save(m).
std::string save_model(const NCModel& model);

// Line (1-based) of the value at `pointer` in `document`, 0 if not found.
int locate_line(std::string_view document, std::string_view pointer);

// Built-in catalog, loaded from the shipped model files.
std::vector<std::string> catalog_names();
std::string catalog_document(const std::string& name);
NCModel catalog_model(const std::string& name);

}  // namespace ncr
