// DTOs mirroring the /v1 API JSON.

export type Choice = 1 | 2 | 3

export type TieShape = 'untied' | 'top2_tied' | 'all_tied'

export interface SurveyQuestionDto {
  id: string
  source: string
  options: [string, string, string]
  tie_shape: TieShape
}

export interface SurveyBlockDto {
  approach: string
  questions: SurveyQuestionDto[]
}

export interface SurveyDto {
  survey_id: string
  family: string
  metric: string | null
  seed: number
  provenance: string
  blocks: SurveyBlockDto[]
}

export interface NutritionDto {
  fat_g: number | null
  sugar_g: number | null
  carbs_g: number | null
  dietary_fiber_pct: number | null
  saturated_fat_g: number | null
  good_fat_pct: number | null
  protein_g: number | null
  salt_g: number | null
}

export interface ProductDto {
  ean: string
  category: string
  subcategory: string
  variety: string
  brand: string
  brand_type: string | null
  brand_attribute: string | null
  name: string
  legal_name: string
  ingredients: string
  servings: number | null
  size: number | null
  unit: string | null
  price: number | null
  nutrition: NutritionDto | null
  messages: string[]
  allergens: string[]
}

export interface UserAnswerDto {
  question: string
  choice: Choice
}

export interface ExpertAnswerDto {
  question: string
  would_select: boolean
  selected: Choice | null
  ranking: [Choice, Choice, Choice]
}

export interface SubmitBodyDto {
  respondent: string
  responses?: UserAnswerDto[]
  expert?: ExpertAnswerDto[]
}

export interface SubmitResultDto {
  stored: number
  skipped_duplicates: number
  expert_stored: number
}

export interface ReportDto {
  survey_id: string
  n_responses: number
  mse: Record<string, Record<string, number | null>>
  accuracy_group3: Record<string, number | null>
  histograms: Record<string, Record<string, number>>
  empty_groups: string[]
  expert?: Record<string, unknown>
}
