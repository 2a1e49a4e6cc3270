#pragma once

#include <string>
#include <string_view>

#include "smf/model.hpp"

namespace smf {

struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(int line_, int col_, const std::string& message)
        : std::runtime_error("line " + std::to_string(line_) + ", col " + std::to_string(col_) + ": " + message),
          line(line_), col(col_) {}
};

// Parses the line-oriented model-spec format described in the README.
FactorModel parse_model(std::string_view text);
FactorModel parse_model_file(const std::string& path);

// Inverse of parse_model up to formatting; parse(serialize(m)) evaluates
// identically to m. Only generic-dense A factors are representable in files.
std::string serialize_model(const FactorModel& model);
void write_model_file(const FactorModel& model, const std::string& path);

// Expression sub-grammar, exposed for direct use and tests.
ScalarExpr parse_expression(std::string_view text);

} // namespace smf
