#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace foundry {

// Error with a stable machine-readable code ("SyntaxError", "MissingElse", ...).
// Codes are part of the CLI diagnostic contract; messages are for humans.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// SHA-256 of `data`, lowercase hex.
std::string sha256_hex(std::string_view data);

// `n` bytes from the process CSPRNG, lowercase hex. Throws
// Error("RandomnessUnavailable") if the entropy source fails.
std::string random_hex(std::size_t n);

std::string read_file(const std::string& path);

// Write via temp-file-then-rename so readers never observe a partial file.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace foundry
