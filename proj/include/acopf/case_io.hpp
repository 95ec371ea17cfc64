#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "acopf/grid.hpp"

namespace acopf {

// Parse error carrying the 1-based position of the offending token.
struct SyntaxError : std::runtime_error {
    SyntaxError(const std::string& msg, int line, int col)
        : std::runtime_error(msg + " at line " + std::to_string(line) + ", column " +
                             std::to_string(col)),
          line(line),
          col(col) {}
    int line;
    int col;
};

struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingReference : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedFeature : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// AMPL-style .dat case files. The grammar accepts:
//   param <name> := <value> ;
//   param : <set> : <col>... := <rows> ;
//   param : <col>... := <rows> ;
//   param <name> := <key>... <value> ... ;    (the C cost table)
//   set G[<int>] := <ints> ;
// with # comments and whitespace-separated tokens.
Grid parse_dat(const std::string& text);
Grid parse_dat_stream(std::istream& in);

// MATPOWER .m subset: baseMVA scalar plus bus/gen/branch/gencost matrices.
// Only numeric literals are understood inside the matrices.
Grid parse_matpower(const std::string& text);

// Emit a .dat document that parses back to an equal Grid.
std::string write_dat(const Grid& grid);

}  // namespace acopf
