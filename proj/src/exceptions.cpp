// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/interpreter.hpp"

namespace wasmlite {

std::optional<Outcome> unwind(Config& c, Value payload) {
    while (!c.frames.empty()) {
        Frame& fr = c.frames.back();
        while (!fr.ctrl_stack.empty()) {
            ControlEntry& e = fr.ctrl_stack.back();
            if (e.kind == EntryKind::Try) {
                if (!e.catch_code) throw InternalError("try entry without a catch body");
                fr.value_stack.resize(e.entry_height);
                fr.value_stack.push_back(payload);
                e.kind = EntryKind::Catch;
                e.code = e.catch_code;
                e.catch_code = nullptr;
                e.ip = 0;
                return std::nullopt;
            }
            fr.ctrl_stack.pop_back();
        }
        c.frames.pop_back();
    }
    return Outcome::uncaught(payload);
}

}  // namespace wasmlite
