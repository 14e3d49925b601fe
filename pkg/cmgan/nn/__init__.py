"""Neural network modules: layers, generator, discriminator, losses, gradient checker"""
from .discriminator import Discriminator
from .generator import Generator, GeneratorOutput, recombine
from .grad_check import GradCheckReport, grad_check

__all__ = ["Discriminator", "Generator", "GeneratorOutput", "recombine", "GradCheckReport", "grad_check"]
