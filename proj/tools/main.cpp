#include <phasessl/cli.hpp>

int main(int argc, char** argv)
{
    return phasessl::run_cli(argc, argv);
}
