#pragma once

#include <stdexcept>
#include <string>

namespace viewlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define VIEWLAB_DEFINE_ERROR(Name)          \
    class Name : public Error {             \
    public:                                 \
        using Error::Error;                 \
    }

VIEWLAB_DEFINE_ERROR(InvalidArgument);
VIEWLAB_DEFINE_ERROR(GenerationExhausted);
VIEWLAB_DEFINE_ERROR(DegenerateObject);
VIEWLAB_DEFINE_ERROR(BehindCamera);
VIEWLAB_DEFINE_ERROR(SizeMismatch);
VIEWLAB_DEFINE_ERROR(EmptyMesh);
VIEWLAB_DEFINE_ERROR(EmptyLibrary);
VIEWLAB_DEFINE_ERROR(DegenerateSpan);
VIEWLAB_DEFINE_ERROR(RankDeficient);
VIEWLAB_DEFINE_ERROR(InsufficientViews);
VIEWLAB_DEFINE_ERROR(DivergedLoss);
VIEWLAB_DEFINE_ERROR(MissingPoses);
VIEWLAB_DEFINE_ERROR(SchemaError);

#undef VIEWLAB_DEFINE_ERROR

/// I/O failure; the message always carries the offending path.
class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace viewlab
