#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowcredit {

// Every failure mode surfaced by the library. Codes are stable strings in
// reports and CLI output, so renaming one is a breaking change.
enum class Errc {
    // graph construction
    CycleDetected,
    MultipleSinks,
    UnknownParent,
    ArityMismatch,
    DeadNode,
    AlreadyAugmented,
    UnknownNode,
    UnknownEdge,
    SizeLimitExceeded,
    // expressions and evaluation
    SyntaxError,
    UnboundVariable,
    DomainError,
    NumericError,
    // external model processes
    ProcessDead,
    ProtocolViolation,
    Timeout,
    // attribution engine
    UnrealizableHistory,
    ConfigurationCapExceeded,
    // reference oracles
    TooManyPlayers,
    NotATree,
    NotLinear,
    // synthetic generators
    DegenerateGraph,
    InvalidDistribution,
    // file formats
    ParseError,
    SchemaError,
    MissingSource,
    InvalidArgument,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::CycleDetected: return "CycleDetected";
        case Errc::MultipleSinks: return "MultipleSinks";
        case Errc::UnknownParent: return "UnknownParent";
        case Errc::ArityMismatch: return "ArityMismatch";
        case Errc::DeadNode: return "DeadNode";
        case Errc::AlreadyAugmented: return "AlreadyAugmented";
        case Errc::UnknownNode: return "UnknownNode";
        case Errc::UnknownEdge: return "UnknownEdge";
        case Errc::SizeLimitExceeded: return "SizeLimitExceeded";
        case Errc::SyntaxError: return "SyntaxError";
        case Errc::UnboundVariable: return "UnboundVariable";
        case Errc::DomainError: return "DomainError";
        case Errc::NumericError: return "NumericError";
        case Errc::ProcessDead: return "ProcessDead";
        case Errc::ProtocolViolation: return "ProtocolViolation";
        case Errc::Timeout: return "Timeout";
        case Errc::UnrealizableHistory: return "UnrealizableHistory";
        case Errc::ConfigurationCapExceeded: return "ConfigurationCapExceeded";
        case Errc::TooManyPlayers: return "TooManyPlayers";
        case Errc::NotATree: return "NotATree";
        case Errc::NotLinear: return "NotLinear";
        case Errc::DegenerateGraph: return "DegenerateGraph";
        case Errc::InvalidDistribution: return "InvalidDistribution";
        case Errc::ParseError: return "ParseError";
        case Errc::SchemaError: return "SchemaError";
        case Errc::MissingSource: return "MissingSource";
        case Errc::InvalidArgument: return "InvalidArgument";
    }
    return "UnknownError";
}

class FlowError : public std::runtime_error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    FlowError(Errc code, const std::string& message, std::size_t position = npos)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code),
          position_(position) {}

    Errc code() const noexcept { return code_; }

    // Byte offset for SyntaxError/ParseError, npos otherwise.
    std::size_t position() const noexcept { return position_; }

private:
    Errc code_;
    std::size_t position_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message,
                              std::size_t position = FlowError::npos) {
    throw FlowError(code, message, position);
}

inline void require(bool ok, Errc code, const std::string& message) {
    if (!ok) fail(code, message);
}

}  // namespace flowcredit
