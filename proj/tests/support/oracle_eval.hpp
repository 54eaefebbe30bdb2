// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "wasmlite/interpreter.hpp"
#include "wasmlite/validator.hpp"

namespace wasmlite::oracle {

/// Big-step reference evaluator, written in a deliberately different style
/// from the engine: recursive tree walking with C++ exceptions standing in
/// for branches, returns, traps, and thrown values. Only meaningful on
/// validated modules; it trusts types and does no stack bookkeeping of its
/// own.
///
/// budget bounds the number of instruction visits (not comparable to engine
/// fuel). Returns nullopt when the budget runs out first; any other result
/// is the program's true outcome and must match the engine's.
std::optional<Outcome> eval_module(const ValidatedModule& vm, std::string_view func_name,
                                   const std::vector<Value>& args, uint64_t budget,
                                   uint32_t max_pages = 4, uint32_t call_depth_limit = 1000);

}  // namespace wasmlite::oracle
