#pragma once

#include <stdexcept>
#include <string>

namespace qdml {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument values: non-unit states, non-unitary matrices, out-of-range
// qubits, malformed configs.
struct ValidationError : Error {
    using Error::Error;
};

// Shape mismatches: wrong vector lengths, incompatible register sizes.
struct StructuralError : Error {
    using Error::Error;
};

// Request exceeds a configured capacity (register too large, grid too big).
struct CapacityError : Error {
    using Error::Error;
};

// A measurement pool ran out of copies.
struct PoolExhaustedError : Error {
    using Error::Error;
};

// A gradient was requested for a slot the chosen method cannot serve.
struct UnsupportedSlotError : Error {
    using Error::Error;
};

}  // namespace qdml
