//! The five tracked nutrient quantities as a small linear vector.

use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Calories in kcal; the four macros in grams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NutrientVector<T> {
    pub calories: T,
    pub protein: T,
    pub sugar: T,
    pub fat: T,
    pub carbohydrate: T,
}

impl<T: Scalar> NutrientVector<T> {
    pub fn new(calories: T, protein: T, sugar: T, fat: T, carbohydrate: T) -> Self {
        Self { calories, protein, sugar, fat, carbohydrate }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn components(&self) -> [T; 5] {
        [self.calories, self.protein, self.sugar, self.fat, self.carbohydrate]
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::new(
            self.calories * factor,
            self.protein * factor,
            self.sugar * factor,
            self.fat * factor,
            self.carbohydrate * factor,
        )
    }

    /// True when every component is finite and non-negative.
    pub fn is_valid(&self) -> bool {
        self.components().iter().all(|c| c.is_finite_value() && *c >= T::zero())
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> NutrientVector<U> {
        NutrientVector {
            calories: f(self.calories),
            protein: f(self.protein),
            sugar: f(self.sugar),
            fat: f(self.fat),
            carbohydrate: f(self.carbohydrate),
        }
    }
}

impl<T: Scalar> Default for NutrientVector<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Scalar> Add for NutrientVector<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.calories + rhs.calories,
            self.protein + rhs.protein,
            self.sugar + rhs.sugar,
            self.fat + rhs.fat,
            self.carbohydrate + rhs.carbohydrate,
        )
    }
}

impl<T: Scalar> AddAssign for NutrientVector<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> Mul<T> for NutrientVector<T> {
    type Output = Self;

    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Scalar> std::iter::Sum for NutrientVector<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), Add::add)
    }
}
