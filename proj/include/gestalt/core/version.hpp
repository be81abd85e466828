#ifndef GESTALT_CORE_VERSION_HPP_
#define GESTALT_CORE_VERSION_HPP_

namespace gestalt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gestalt

#endif  // GESTALT_CORE_VERSION_HPP_
