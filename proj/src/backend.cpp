#include "interwhen/backend.hpp"

namespace interwhen {

GenerationParams preset_params(std::string_view name) {
    if (name == "qwen") return {0.6, 0.95, 20, 32768};
    if (name == "phi4") return {0.8, 0.95, 50, 16384};
    return {};
}

}  // namespace interwhen
