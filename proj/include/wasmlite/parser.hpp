// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wasmlite/ast.hpp"

namespace wasmlite {

struct ParseError {
    SourcePos pos;
    std::string message;
};

struct ParseResult {
    std::optional<ModuleAst> module;  // engaged iff errors is empty
    std::vector<ParseError> errors;

    bool ok() const { return errors.empty(); }
};

/// Parses wasmlite text (.wml). Total and deterministic: any input yields
/// either a module or a nonempty error list, never both. No validation is
/// performed beyond what is needed to build the tree; local and label
/// indices may dangle. Function and global references use `$name` and are
/// resolved to indices here; an unknown name is a parse error.
ParseResult parse_module(std::string_view text);

}  // namespace wasmlite
