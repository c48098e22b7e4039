"""Классификация, разложения, сходимость Mosco и одномерные диффузии."""
