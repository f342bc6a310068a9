#pragma once

#include <string>
#include <string_view>

namespace ah {

std::string base64_encode(std::string_view bytes);

}  // namespace ah
