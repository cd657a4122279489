#pragma once

#include <string_view>

// Text resources compiled in from core/data/.
namespace medvp::builtin {

std::string_view gazetteer();
/// Template file contents by stem ("marker", "prompted_open", ...); empty
/// for unknown names.
std::string_view template_text(std::string_view name);

}  // namespace medvp::builtin
