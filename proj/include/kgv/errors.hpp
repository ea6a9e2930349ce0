#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgv {

enum class ErrorCode {
    EmptyDocument,
    MalformedStix,
    EmptyParagraph,
    ProviderFailure,
    ZeroVector,
    DimMismatch,
    EmptyCorpus,
    DegenerateGraph,
    NoSeedNodes,
    NoEntitiesFound,
    MalformedLlmOutput,
    ConstraintViolation,
    UnparsableClaim,
    EmptyVerdictList,
    IdMismatch,
    Precondition,
    ConfigError,
    IoError,
};

const char* to_string(ErrorCode code);

// Pipeline stage attribution, mirroring the four-stage error accounting
// of the verification process.
enum class Stage {
    KeyPointExtraction,
    ClaimExtraction,
    TripleRetrieval,
    PointVerification,
};

const char* to_string(Stage stage);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    std::optional<Stage> stage() const noexcept { return stage_; }
    Error& with_stage(Stage s) {
        if (!stage_) stage_ = s;
        return *this;
    }

    // ConstraintViolation: prompt-rule numbers that failed validation.
    const std::vector<int>& failed_rules() const noexcept { return failed_rules_; }
    Error& with_rules(std::vector<int> rules) {
        failed_rules_ = std::move(rules);
        return *this;
    }

    // ProviderFailure: how many attempts were made before giving up.
    int attempts() const noexcept { return attempts_; }
    Error& with_attempts(int n) {
        attempts_ = n;
        return *this;
    }

private:
    ErrorCode code_;
    std::optional<Stage> stage_;
    std::vector<int> failed_rules_;
    int attempts_ = 0;
};

} // namespace kgv
