#include "synthctl/parallel.hpp"

#include "text.hpp"

#include <cstdlib>

namespace synthctl {

unsigned resolve_threads(int requested) {
    if (requested > 0) return static_cast<unsigned>(requested);
    if (const char* env = std::getenv("SYNTHCTL_THREADS")) {
        if (auto n = detail::parse_integer(env); n && *n > 0) return static_cast<unsigned>(*n);
    }
    return 1;
}

}  // namespace synthctl
