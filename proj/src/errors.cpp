#include "nlar/errors.hpp"

#include <sstream>

namespace nlar {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Fit: return "fit";
    case ErrorKind::Explosion: return "explosion";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

namespace {
std::string explosion_message(std::size_t step, double value) {
    std::ostringstream os;
    os << "simulation exploded at step " << step << " (value " << value << ")";
    return os.str();
}
}  // namespace

ExplosionError::ExplosionError(std::size_t step, double value)
    : Error(ErrorKind::Explosion, explosion_message(step, value)), step_(step) {}

}  // namespace nlar
