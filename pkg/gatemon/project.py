__all__ = [ "project" ]  # pylint: disable=unused-variable

project = {
    "name"         : "gatemon",
    "description"  : "Linear-time Gaussian process inference of boundary loads, thermal strain and gage bias from"
                     " strain monitoring data.",
    "year"         : "2026",
    "author"       : "The gatemon developers",
    "author_email" : "gatemon@example.org",
    "categories"   : [
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics"
    ]
}
