#include <errno.h>

#include "cascade/audit.hpp"

namespace {

// Every unit-test executable reports the traces it produced.
const bool installed = (cascade::audit::install(program_invocation_short_name), true);

}  // namespace
