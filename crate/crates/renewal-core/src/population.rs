/// The three transported populations.
///
/// Juveniles live on ages `[0, abar]`. At the maturity age `abar` the flow
/// splits: a fraction `eta(t)` continues as sale stock, the rest as brood
/// stock, both on `[abar, amax]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Population {
    Juvenile,
    Sale,
    Brood,
}

impl Population {
    pub const ALL: [Population; 3] = [Population::Juvenile, Population::Sale, Population::Brood];

    pub fn index(self) -> usize {
        match self {
            Population::Juvenile => 0,
            Population::Sale => 1,
            Population::Brood => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Population::Juvenile => "juvenile",
            Population::Sale => "sale",
            Population::Brood => "brood",
        }
    }
}

/// One value of type `T` per population.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerPopulation<T> {
    pub juvenile: T,
    pub sale: T,
    pub brood: T,
}

impl<T> PerPopulation<T> {
    pub fn new(juvenile: T, sale: T, brood: T) -> Self {
        Self { juvenile, sale, brood }
    }

    pub fn uniform(value: T) -> Self
    where
        T: Clone,
    {
        Self { juvenile: value.clone(), sale: value.clone(), brood: value }
    }

    pub fn get(&self, p: Population) -> &T {
        match p {
            Population::Juvenile => &self.juvenile,
            Population::Sale => &self.sale,
            Population::Brood => &self.brood,
        }
    }

    pub fn get_mut(&mut self, p: Population) -> &mut T {
        match p {
            Population::Juvenile => &mut self.juvenile,
            Population::Sale => &mut self.sale,
            Population::Brood => &mut self.brood,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> PerPopulation<U> {
        PerPopulation {
            juvenile: f(&self.juvenile),
            sale: f(&self.sale),
            brood: f(&self.brood),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Population, &T)> {
        Population::ALL.iter().map(move |&p| (p, self.get(p)))
    }
}
