// Stand-in for libopencv_core: the build information banner and a few
// functions in the cv namespace.
namespace cv {

static const char build_info[] =
    "\nGeneral Configuration for OpenCV 4.1.0 =====================================\n"
    "  Version control:               4.1.0\n";

const char *getBuildInformation()
{
    return build_info;
}

int resize(const unsigned char *src, unsigned char *dst, int w, int h)
{
    for (int i = 0; i < w * h; ++i)
        dst[i] = src[i];
    return w * h;
}

namespace utils {
int getNumThreads()
{
    return 4;
}
} // namespace utils

} // namespace cv

extern "C" int cv_resize_impl(const unsigned char *src, unsigned char *dst, int n)
{
    return cv::resize(src, dst, n, 1);
}
