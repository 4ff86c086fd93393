#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lal/grad_check.hpp"
#include "lal/io.hpp"
#include "lal/morphology.hpp"
#include "lal/sweep.hpp"

namespace py = pybind11;
using namespace lal;

namespace {

Image2D image_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ShapeError("image array must be 2-D");
    Image2D img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    std::copy(a.data(), a.data() + img.px.size(), img.px.begin());
    return img;
}

py::array_t<double> image_to_numpy(const Image2D& img) {
    py::array_t<double> a({img.h, img.w});
    std::copy(img.px.begin(), img.px.end(), a.mutable_data());
    return a;
}

Mask2D mask_from_numpy(const py::array_t<uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ShapeError("mask array must be 2-D");
    Mask2D m(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
    for (size_t i = 0; i < m.bits.size(); ++i) {
        const uint8_t v = a.data()[i];
        if (v > 1) throw ValueError("mask array entries must be 0 or 1");
        m.bits[i] = v;
    }
    return m;
}

py::array_t<uint8_t> mask_to_numpy(const Mask2D& m) {
    py::array_t<uint8_t> a({m.h, m.w});
    std::copy(m.bits.begin(), m.bits.end(), a.mutable_data());
    return a;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "vessel segmentation with an adjustable skeleton-to-pixel operating point";

    const py::object base = py::register_exception<Error>(m, "LalError", PyExc_RuntimeError);
    py::register_exception<NoVesselError>(m, "NoVesselError", base.ptr());
    py::register_exception<DegenerateCurveError>(m, "DegenerateCurveError", base.ptr());

    py::class_<Image2D>(m, "Image")
        .def(py::init(&image_from_numpy), py::arg("array"))
        .def_readonly("h", &Image2D::h)
        .def_readonly("w", &Image2D::w)
        .def("numpy", &image_to_numpy);

    py::class_<Mask2D>(m, "Mask")
        .def(py::init(&mask_from_numpy), py::arg("array"))
        .def_readonly("h", &Mask2D::h)
        .def_readonly("w", &Mask2D::w)
        .def("popcount", &Mask2D::popcount)
        .def("numpy", &mask_to_numpy)
        .def("__eq__", [](const Mask2D& a, const Mask2D& b) { return a == b; });

    py::class_<LabelPair>(m, "LabelPair")
        .def_readonly("pixel", &LabelPair::pixel)
        .def_readonly("skeleton", &LabelPair::skeleton);

    py::class_<Phantom>(m, "Phantom")
        .def_readonly("image", &Phantom::image)
        .def_readonly("labels", &Phantom::labels);

    py::class_<PhantomConfig>(m, "PhantomConfig")
        .def(py::init<>())
        .def_readwrite("size", &PhantomConfig::size)
        .def_readwrite("n_trees", &PhantomConfig::n_trees)
        .def_readwrite("capillary_density", &PhantomConfig::capillary_density)
        .def_readwrite("branch_prob", &PhantomConfig::branch_prob)
        .def_readwrite("noise_std", &PhantomConfig::noise_std)
        .def_readwrite("blur_radius", &PhantomConfig::blur_radius)
        .def_readwrite("background_amp", &PhantomConfig::background_amp)
        .def_readwrite("thickness_contrast", &PhantomConfig::thickness_contrast)
        .def_readwrite("seed", &PhantomConfig::seed);

    py::class_<NetworkConfig>(m, "NetworkConfig")
        .def(py::init<>())
        .def_readwrite("depth", &NetworkConfig::depth)
        .def_readwrite("base_channels", &NetworkConfig::base_channels);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("optimizer", &TrainConfig::optimizer)
        .def_readwrite("beta1", &TrainConfig::beta1)
        .def_readwrite("beta2", &TrainConfig::beta2)
        .def_readwrite("eps", &TrainConfig::eps)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("fixed_w", &TrainConfig::fixed_w);

    py::class_<ModelParams>(m, "Model")
        .def_readonly("config", &ModelParams::config)
        .def("total_parameters", &ModelParams::total_parameters);

    py::class_<TrainReport>(m, "TrainReport")
        .def_readonly("epoch_loss", &TrainReport::epoch_loss)
        .def_readonly("steps", &TrainReport::steps);

    py::class_<MetricRecord>(m, "MetricRecord")
        .def_readonly("vdi", &MetricRecord::vdi)
        .def_readonly("vd", &MetricRecord::vd)
        .def_readonly("vlf", &MetricRecord::vlf)
        .def_readonly("fd", &MetricRecord::fd)
        .def_readonly("vc", &MetricRecord::vc)
        .def_readonly("ni", &MetricRecord::ni)
        .def_readonly("dice", &MetricRecord::dice)
        .def_readonly("accuracy", &MetricRecord::accuracy);

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("grid", &SweepResult::grid)
        .def_readonly("masks", &SweepResult::masks)
        .def_readonly("records", &SweepResult::records);

    py::class_<RecommendResult>(m, "RecommendResult")
        .def_readonly("w_star", &RecommendResult::w_star)
        .def_readonly("ws", &RecommendResult::ws)
        .def_readonly("raw", &RecommendResult::raw)
        .def_readonly("smoothed", &RecommendResult::smoothed)
        .def_readonly("curvature", &RecommendResult::curvature);

    m.def("make_phantom", &make_phantom, py::arg("config"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());
    m.def("build_unet", &build_unet_lal, py::arg("config"), py::arg("seed"));
    m.def("expected_parameter_count", &expected_parameter_count, py::arg("config"));
    m.def(
        "forward",
        [](const ModelParams& p, const Image2D& img, double w) { return unet_forward(p, img, w); },
        py::arg("model"), py::arg("image"), py::arg("w"),
        py::call_guard<py::gil_scoped_release>());
    m.def("train", &train, py::arg("model"), py::arg("dataset"), py::arg("config"),
          py::arg("on_epoch") = py::none());
    m.def(
        "sweep",
        [](const ModelParams& p, const Image2D& img, double step, double threshold) {
            return sweep(p, img, step, threshold);
        },
        py::arg("model"), py::arg("image"), py::arg("step") = 0.01, py::arg("threshold") = 0.5,
        py::call_guard<py::gil_scoped_release>());
    m.def("recommend_w", &recommend_w, py::arg("sweep"));
    m.def("recommend_from_curve", &recommend_from_curve, py::arg("ws"), py::arg("vdis"));
    m.def("uncertainty_map", &uncertainty_map, py::arg("sweep"));
    m.def("denoise", &denoise, py::arg("mask"), py::arg("uncertainty"));

    m.def("binarize", &binarize, py::arg("prob"), py::arg("threshold") = 0.5);
    m.def("skeletonize", &skeletonize, py::arg("mask"));
    m.def("compute_metrics", &compute_metrics, py::arg("mask"), py::arg("skeleton"),
          py::arg("gt") = nullptr);
    m.def("lal_loss_value", [](const ModelParams& p, const Phantom& sample, double w) {
        Graph g;
        TensorPtr pred = unet_forward_graph(g, p, image_to_tensor(sample.image), w);
        return lal_loss(g, pred, sample.labels, w)->data[0];
    });

    m.def("save_checkpoint", &save_checkpoint, py::arg("path"), py::arg("model"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
    m.def("read_pgm_image", &read_pgm_image, py::arg("path"));
    m.def("read_pgm_mask", &read_pgm_mask, py::arg("path"));
    m.def("write_pgm_image", [](const std::string& path, const Image2D& img) { write_pgm(path, img); });
    m.def("write_pgm_mask", [](const std::string& path, const Mask2D& mask) { write_pgm(path, mask); });
}
