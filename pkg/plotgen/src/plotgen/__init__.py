from .render import FigureRecipe, SchemaError, load_recipe, render, render_figure

__all__ = ["FigureRecipe", "SchemaError", "load_recipe", "render", "render_figure"]
__version__ = "0.1.0"
