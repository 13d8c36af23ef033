#pragma once

#include <stdexcept>
#include <string>

namespace gazereg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- geometry ----
struct TooFewPoints : Error { using Error::Error; };
struct DegenerateConfiguration : Error { using Error::Error; };
struct PointAtInfinity : Error { using Error::Error; };
struct NoConsensus : Error { using Error::Error; };

// ---- features / image IO ----
struct ImageTooSmall : Error { using Error::Error; };
struct UnreadableImage : Error {
    explicit UnreadableImage(const std::string& path, const std::string& why = "")
        : Error("unreadable image: " + path + (why.empty() ? "" : " (" + why + ")")),
          path(path) {}
    std::string path;
};

// ---- registry ----
struct DuplicateImageId : Error { using Error::Error; };
struct PoseForUnknownImage : Error { using Error::Error; };
struct UnknownImage : Error { using Error::Error; };
struct BoxOutOfBounds : Error { using Error::Error; };
struct InvertedBox : Error { using Error::Error; };
struct NoSeeds : Error { using Error::Error; };
struct Io : Error { using Error::Error; };
struct FormatVersionMismatch : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };

// ---- session ----
struct MalformedRow : Error {
    MalformedRow(int line, const std::string& why)
        : Error("malformed row at line " + std::to_string(line) + ": " + why), line(line) {}
    int line;
};
struct NonMonotonicTimestamp : Error {
    explicit NonMonotonicTimestamp(int line)
        : Error("non-monotonic timestamp at line " + std::to_string(line)), line(line) {}
    int line;
};
struct NoHomography : Error { using Error::Error; };

// ---- metrics ----
struct ZeroTotal : Error { using Error::Error; };
struct CountExceedsTotal : Error { using Error::Error; };
struct EmptyList : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct ZeroVariance : Error { using Error::Error; };
struct DegenerateSample : Error { using Error::Error; };
struct TooFewWorkers : Error { using Error::Error; };
struct KeyMismatch : Error { using Error::Error; };
struct ZeroSystemDwell : Error { using Error::Error; };

// ---- synth ----
struct InvalidWarpRange : Error { using Error::Error; };
struct PointOutsideScene : Error { using Error::Error; };

} // namespace gazereg
