#pragma once

#include <stdexcept>
#include <string>

#include "acopf/formulation.hpp"

namespace acopf {

struct UnsupportedConstraint : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Canonical JSON serialization of a formulation: keys and terms are emitted
// in a fixed sorted order, so equal values produce byte-identical documents.
std::string export_json(const Formulation& f);
Formulation import_json(const std::string& text);

// Sparse SDPA text. Requires every scalar constraint to be linear; cone
// constraints are embedded as 4x4 PSD blocks. Throws UnsupportedConstraint
// on polynomial content of degree 2 or higher.
std::string export_sdpa(const Formulation& f);

// Flat JSON object mapping variable names to values.
Point read_point_json(const std::string& text);
std::string write_point_json(const Point& p);

}  // namespace acopf
