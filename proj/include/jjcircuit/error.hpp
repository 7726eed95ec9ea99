#pragma once

#include <stdexcept>
#include <string>

namespace jjcircuit {

// Malformed input: bad file, missing field, violated precondition on user data.
class input_error : public std::invalid_argument {
public:
    explicit input_error(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical routine could not produce a trustworthy answer.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Least-squares normal equations are rank deficient at the current point.
class singular_jacobian_error : public numerical_error {
public:
    explicit singular_jacobian_error(const std::string& what) : numerical_error(what) {}
};

} // namespace jjcircuit
